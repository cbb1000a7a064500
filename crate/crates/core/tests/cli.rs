use std::path::Path;
use std::process::{Command, Output};

use aigw::io::{NumericRow, TrajectoryRow};
use tempfile::TempDir;

fn aigw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aigw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = aigw(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn numeric_sweep_is_byte_identical_across_runs_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["numeric", "--freq-min", "0.2", "--freq-points", "24"];
    let mut args_a = common.to_vec();
    args_a.extend(["--workers", "1", "--output", path_str(&a)]);
    let mut args_b = common.to_vec();
    args_b.extend(["--workers", "3", "--output", path_str(&b)]);
    ok(&args_a);
    ok(&args_b);
    let bytes_a = std::fs::read(&a).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    let header = String::from_utf8(bytes_a).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(
        header,
        "f_hz,delta_h,Q,N,NP,ell,H_m,L_m,z0_m,v0_mps,T_s,TAI_s,binding,analytic_delta_h,gap_rel"
    );
}

#[test]
fn empty_grid_exits_nonzero_with_error_record() {
    let out = aigw(&["analytic", "--freq-points", "0"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "validation");
    assert_eq!(record["field"], "grid.points");
}

#[test]
fn bad_config_reports_location() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "baseline_m = 100.0\n\n[grid]\npoints = 10\nspacing = 3\n").unwrap();
    let out = aigw(&["analytic", "--config", path_str(&cfg)]);
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["field"], "config");
    let message = record["message"].as_str().unwrap();
    assert!(message.contains("line 5"), "{message}");
    assert!(message.contains("spacing"), "{message}");
}

#[test]
fn config_file_and_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "baseline_m = 100.0\n\n[noise]\nmode = \"shot_noise\"\nloss_per_pulse = 1.1e-3\ncontrast = 1.0\nrepetitions = 1.0\ninitial_atoms = 1e6\n\n[grid]\nmin_hz = 0.5\nmax_hz = 1.0\npoints = 2\n",
    )
    .unwrap();
    let text = ok(&["analytic", "--config", path_str(&cfg)]);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "f_hz,NP,Q,N,ell,regime");
    assert_eq!(rows.len(), 3);
    let np: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((np - 1800.0).abs() < 36.0, "{np}");

    let text = ok(&[
        "analytic",
        "--config",
        path_str(&cfg),
        "--baseline-m",
        "2000",
        "--freq-min",
        "5",
        "--freq-max",
        "10",
    ]);
    let q: f64 = text.lines().nth(2).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(q > 1.0, "2 km at 10 Hz leaves the single-diamond regime, got Q = {q}");
}

#[test]
fn numeric_record_round_trips_through_check_and_response() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("sweep.json");
    ok(&[
        "numeric",
        "--freq-min",
        "0.5",
        "--freq-max",
        "2",
        "--freq-points",
        "3",
        "--format",
        "json",
        "--output",
        path_str(&json),
    ]);
    let rows: Vec<NumericRow> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    let row = &rows[1];

    let report = ok(&[
        "check",
        "--q",
        &row.q.unwrap().to_string(),
        "--n",
        &row.n.unwrap().to_string(),
        "--z0",
        &row.z0_m.unwrap().to_string(),
        "--v0",
        &row.v0_mps.unwrap().to_string(),
        "--frequency",
        &row.f_hz.to_string(),
        "--window-m",
        &row.h_m.unwrap().to_string(),
    ]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["feasible"], true);

    let f = row.f_hz;
    let text = ok(&[
        "response",
        "--record",
        path_str(&json),
        "--row",
        "1",
        "--freq-min",
        &(0.8 * f).to_string(),
        "--freq-max",
        &(1.2 * f).to_string(),
        "--freq-points",
        "401",
        "--log-grid",
        "false",
    ]);
    let mut best = (f64::NAN, f64::INFINITY);
    for line in text.lines().skip(1) {
        let mut cols = line.split(',').map(|c| c.parse::<f64>().unwrap());
        let (fr, dh) = (cols.next().unwrap(), cols.next().unwrap());
        if dh < best.1 {
            best = (fr, dh);
        }
    }
    let step = 0.4 * f / 400.0;
    assert!((best.0 - f).abs() <= step * (1.0 + 1e-9), "minimum at {} vs {f}", best.0);

    let out = aigw(&["response", "--record", path_str(&json), "--row", "7"]);
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["field"], "row");
}

#[test]
fn check_dump_matches_envelope() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("traj.csv");
    let report = ok(&[
        "check",
        "--q",
        "3",
        "--n",
        "400",
        "--z0",
        "1.5",
        "--v0",
        "14.0",
        "--interrogation-time",
        "0.5",
        "--window-m",
        "100",
        "--dump",
        path_str(&dump),
        "--step",
        "1e-4",
    ]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    let mut reader = csv::Reader::from_path(&dump).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t_s", "z_lower_m", "z_upper_m"]
    );
    let rows: Vec<TrajectoryRow> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert!(rows.windows(2).all(|w| w[1].t_s > w[0].t_s));
    let lo = rows.iter().map(|r| r.z_lower_m).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.z_upper_m).fold(f64::NEG_INFINITY, f64::max);
    let min_lower = report["min_lower_arm"].as_f64().unwrap();
    let max_upper = report["max_upper_arm"].as_f64().unwrap();
    assert!(lo >= min_lower - 1e-9 && hi <= max_upper + 1e-9);
    // samples land within a step of the extrema: |dz| <= (v_max * step)
    assert!(lo - min_lower < 5e-3 && max_upper - hi < 5e-3, "{lo} {min_lower} {hi} {max_upper}");
}

#[test]
fn separation_beyond_window_is_infeasible() {
    // peak separation N v_r T = 2e4 * 6.57e-3 * 1 s > 100 m
    let report = ok(&[
        "check", "--q", "1", "--n", "20000", "--z0", "0", "--v0", "9.80665", "--frequency", "0.5",
        "--window-m", "100",
    ]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["feasible"], false);
    assert_eq!(report["binding_constraint"], "both");

    let out = aigw(&["check", "--q", "0", "--n", "2", "--z0", "0", "--v0", "0", "--frequency", "1"]);
    assert!(!out.status.success());
}
