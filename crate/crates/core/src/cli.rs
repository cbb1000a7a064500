//! Command-line front end. `main` parses [`Cli`] and calls [`run`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytic::{bottom_constraint_thresholds, select_regime};
use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::io::{write_rows, AnalyticRow, NumericRow, RegimeRow, ResponseRow, TrajectoryRow};
use crate::model::{resonant_interrogation_time, DetectorGeometry, PhaseNoise, PulseScheme};
use crate::noise::phase_uncertainty;
use crate::numeric::compare_with_analytic;
use crate::signal::response_curve;
use crate::trajectory::{arm_paths, check_confinement, FeasibilityReport};

#[derive(Debug, Parser)]
#[command(name = "aigw", version, about = "Atom-interferometer GW detector design sweeps")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true, value_name = "HZ")]
    pub freq_min: Option<f64>,
    #[arg(long, global = true, value_name = "HZ")]
    pub freq_max: Option<f64>,
    #[arg(long, global = true, value_name = "COUNT")]
    pub freq_points: Option<usize>,
    /// Log-spaced grid; `--log-grid false` for linear spacing
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub log_grid: Option<bool>,
    #[arg(long, global = true, value_name = "M")]
    pub baseline_m: Option<f64>,
    #[arg(long, global = true)]
    pub np_max: Option<u64>,
    #[arg(long, global = true, value_name = "LAMBDA")]
    pub loss_per_pulse: Option<f64>,
    /// Fixed phase uncertainty; replaces the shot-noise model
    #[arg(long, global = true, value_name = "RAD")]
    pub phase_uncertainty: Option<f64>,
    #[arg(long, global = true)]
    pub no_arm_separation: bool,
    /// Worker threads (all cores when omitted)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continuous optimum per frequency
    Analytic,
    /// Cutoff frequency and bottom-constraint loss thresholds per frequency
    Regimes,
    /// Integer optimum with confinement, paired with the analytic optimum
    Numeric,
    /// Off-resonance strain uncertainty of one numeric record
    Response(ResponseArgs),
    /// Confinement report for an explicit scheme and launch
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ResponseArgs {
    /// JSON produced by `numeric --format json` (array or single object)
    #[arg(long, value_name = "PATH")]
    pub record: PathBuf,
    /// Index into the record array
    #[arg(long, default_value_t = 0)]
    pub row: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub q: u32,
    #[arg(long)]
    pub n: u32,
    #[arg(long, value_name = "M")]
    pub z0: f64,
    #[arg(long, value_name = "M/S")]
    pub v0: f64,
    /// Resonant frequency fixing T = 1/(2f)
    #[arg(long, value_name = "HZ", conflicts_with = "interrogation_time", required_unless_present = "interrogation_time")]
    pub frequency: Option<f64>,
    #[arg(long, value_name = "S")]
    pub interrogation_time: Option<f64>,
    /// Confinement window height (the baseline when omitted)
    #[arg(long, value_name = "M")]
    pub window_m: Option<f64>,
    /// Write the sampled trajectory here
    #[arg(long, value_name = "PATH")]
    pub dump: Option<PathBuf>,
    /// Sampling step of the dump
    #[arg(long, value_name = "S", default_value_t = 1e-3)]
    pub step: f64,
}

/// Builds the effective configuration: file (or defaults) then flags.
pub fn resolve_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.output {
        config.output.path = Some(v.clone());
    }
    if let Some(v) = args.format {
        config.output.format = v;
    }
    if let Some(v) = args.freq_min {
        config.grid.min_hz = v;
    }
    if let Some(v) = args.freq_max {
        config.grid.max_hz = v;
    }
    if let Some(v) = args.freq_points {
        config.grid.points = v;
    }
    if let Some(v) = args.log_grid {
        config.grid.log = v;
    }
    if let Some(v) = args.baseline_m {
        config.baseline_m = v;
    }
    if let Some(v) = args.np_max {
        config.np_max = v;
    }
    if let Some(v) = args.loss_per_pulse {
        config.noise.loss_per_pulse = v;
    }
    if let Some(v) = args.phase_uncertainty {
        config.noise.phase = PhaseNoise::Fixed {
            phase_uncertainty: v,
        };
    }
    if args.no_arm_separation {
        config.search.enforce_arm_separation = false;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = resolve_config(&cli.common)?;
    let workers = cli.common.workers;
    if workers == Some(0) {
        return Err(Error::validation("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::validation("workers", e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Analytic => emit(&config, &analytic_rows(&config)?),
        Command::Regimes => emit(&config, &regime_rows(&config)?),
        Command::Numeric => emit(&config, &numeric_rows(&config)?),
        Command::Response(args) => {
            let records = read_records(&args.record)?;
            let record = records.get(args.row).ok_or_else(|| {
                Error::validation(
                    "row",
                    format!("record file holds {} rows, asked for index {}", records.len(), args.row),
                )
            })?;
            emit(&config, &response_rows(&config, record)?)
        }
        Command::Check(args) => {
            let (report, dump) = check(&config, args)?;
            if let Some(path) = &args.dump {
                write_rows(&dump, config.output.format, open(path)?)?;
            }
            let mut out = sink(config.output.path.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &report).map_err(output_error)?;
            writeln!(out).map_err(output_error)?;
            out.flush().map_err(output_error)
        }
    })
}

fn output_error(e: impl std::fmt::Display) -> Error {
    Error::validation("output", e.to_string())
}

fn open(path: &Path) -> Result<Box<dyn Write>> {
    let file = File::create(path).map_err(|e| output_error(format!("{}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => open(p),
        None => Ok(Box::new(BufWriter::new(std::io::stdout().lock()))),
    }
}

fn emit<T: Serialize>(config: &RunConfig, rows: &[T]) -> Result<()> {
    let mut out = sink(config.output.path.as_deref())?;
    write_rows(rows, config.output.format, &mut out)?;
    out.flush().map_err(output_error)
}

pub fn analytic_rows(config: &RunConfig) -> Result<Vec<AnalyticRow>> {
    let loss = config.noise.loss_per_pulse;
    let fixed = (loss == 0.0).then_some(config.np_max as f64);
    config
        .grid
        .frequencies()?
        .into_iter()
        .map(|f| {
            AnalyticRow::new(
                f,
                select_regime(loss, config.baseline_m, f, config.constants.g, fixed),
            )
        })
        .collect()
}

pub fn regime_rows(config: &RunConfig) -> Result<Vec<RegimeRow>> {
    let species = config.species()?;
    config
        .grid
        .frequencies()?
        .into_iter()
        .map(|f| {
            let b = bottom_constraint_thresholds(f, config.baseline_m, &species, config.constants.g)?;
            Ok(RegimeRow {
                f_hz: f,
                f_min_hz: b.f_min_resonant,
                lambda_bottom_q1: b.lambda_bottom_q1,
                lambda_bottom_highf: b.lambda_bottom_highf,
            })
        })
        .collect()
}

pub fn numeric_rows(config: &RunConfig) -> Result<Vec<NumericRow>> {
    let constraints = config.search_constraints()?;
    let grid = config.grid.frequencies()?;
    Ok(compare_with_analytic(&constraints, &grid)?
        .iter()
        .map(NumericRow::from)
        .collect())
}

/// Reads numeric rows from a JSON file holding one row or an array of rows.
pub fn read_records(path: &Path) -> Result<Vec<NumericRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation("record", format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::validation("record", e.to_string()))?;
    let parsed = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|row| vec![row])
    };
    parsed.map_err(|e| Error::validation("record", e.to_string()))
}

/// Strain uncertainty of the record's fixed scheme across the configured grid.
pub fn response_rows(config: &RunConfig, record: &NumericRow) -> Result<Vec<ResponseRow>> {
    let missing = || {
        Error::validation(
            "record",
            format!("row at f = {} Hz has no feasible scheme ({})", record.f_hz, record.binding),
        )
    };
    let (q, n, np, height) = (
        record.q.ok_or_else(missing)?,
        record.n.ok_or_else(missing)?,
        record.np.ok_or_else(missing)?,
        record.h_m.ok_or_else(missing)?,
    );
    let n = u32::try_from(n).map_err(|_| Error::validation("record.N", "out of range"))?;
    let baseline = config.baseline_m;
    if let Some(l) = record.l_m {
        if ((l + height) - baseline).abs() > 1e-9 * baseline {
            return Err(Error::validation(
                "record",
                format!("H_m + L_m = {} m does not match the configured baseline {baseline} m", l + height),
            ));
        }
    }
    let geometry = DetectorGeometry::new(baseline, height, &config.constants)?;
    let scheme = PulseScheme::new(q, n, record.t_s)?;
    let species = config.species()?;
    let dphi = phase_uncertainty(&config.noise, np as f64)?;
    let grid = config.grid.frequencies()?;
    let curve = response_curve(1.0, species.wave_number(), &geometry, &scheme, &grid)?;
    Ok(curve
        .into_iter()
        .map(|p| ResponseRow {
            f_hz: p.frequency,
            delta_h: if p.amplitude > 0.0 {
                dphi / p.amplitude
            } else {
                f64::INFINITY
            },
        })
        .collect())
}

/// Confinement report and sampled arms of an explicit scheme.
pub fn check(config: &RunConfig, args: &CheckArgs) -> Result<(FeasibilityReport, Vec<TrajectoryRow>)> {
    if args.q < 1 {
        return Err(Error::validation("q", "must be at least 1"));
    }
    if args.n < 1 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    let t = match (args.frequency, args.interrogation_time) {
        (Some(f), _) => resonant_interrogation_time(f).map_err(|e| Error::validation("frequency", e.to_string()))?,
        (None, Some(t)) if t > 0.0 && t.is_finite() => t,
        _ => return Err(Error::validation("interrogation_time", "must be positive")),
    };
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(Error::validation("step", "must be positive"));
    }
    let species = config.species()?;
    let traj = arm_paths(
        args.q,
        args.n,
        t,
        args.z0,
        args.v0,
        species.recoil_velocity(),
        config.constants.g,
    )?;
    let window = args.window_m.unwrap_or(config.baseline_m);
    let report = check_confinement(&traj, window).map_err(|e| Error::validation("window_m", e.to_string()))?;
    let dump = if args.dump.is_some() {
        traj.sample(args.step)?
            .into_iter()
            .map(|(t_s, z_lower_m, z_upper_m)| TrajectoryRow {
                t_s,
                z_lower_m,
                z_upper_m,
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((report, dump))
}

/// Machine-readable error record written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        let (kind, field) = match e {
            Error::Domain(_) => ("domain", None),
            Error::LosslessRequiresFixedPulses => ("lossless_requires_fixed_pulses", None),
            Error::BelowResonantCutoff { .. } => ("below_resonant_cutoff", None),
            Error::NoAtomsSurvive { .. } => ("no_atoms_survive", None),
            Error::SignalNull { .. } => ("signal_null", None),
            Error::NonConvergence { .. } => ("non_convergence", None),
            Error::NoFeasibleScheme { .. } => ("no_feasible_scheme", None),
            Error::Validation { field, .. } => ("validation", Some(field.clone())),
        };
        ErrorRecord {
            error: kind,
            field,
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("aigw").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse(&[
            "numeric",
            "--baseline-m",
            "2000",
            "--freq-points",
            "3",
            "--log-grid",
            "false",
            "--no-arm-separation",
            "--phase-uncertainty",
            "1e-4",
        ]);
        let c = resolve_config(&cli.common).unwrap();
        assert_eq!(c.baseline_m, 2000.0);
        assert_eq!(c.grid.points, 3);
        assert!(!c.grid.log);
        assert!(!c.search.enforce_arm_separation);
        assert_eq!(
            c.noise.phase,
            PhaseNoise::Fixed {
                phase_uncertainty: 1e-4
            }
        );
        let cli = parse(&["analytic", "--log-grid"]);
        assert_eq!(cli.common.log_grid, Some(true));
    }

    #[test]
    fn empty_grid_is_a_validation_error() {
        let cli = parse(&["analytic", "--freq-points", "0"]);
        match resolve_config(&cli.common) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "grid.points"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn response_peaks_at_the_record() {
        let mut config = RunConfig::default();
        config.grid.min_hz = 0.5;
        config.grid.max_hz = 2.0;
        config.grid.points = 301;
        config.grid.log = false;
        let constraints = config.search_constraints().unwrap();
        let cmp = compare_with_analytic(&constraints, &[1.0]).unwrap();
        let row = NumericRow::from(&cmp[0]);
        let rows = response_rows(&config, &row).unwrap();
        let best = rows
            .iter()
            .min_by(|a, b| a.delta_h.total_cmp(&b.delta_h))
            .unwrap();
        assert!((best.f_hz - 1.0).abs() <= 1.5 / 300.0 + 1e-12);
        let at = rows.iter().find(|r| (r.f_hz - 1.0).abs() < 1e-12).unwrap();
        let tau_b_omega = 2.0 * PI * config.baseline_m / config.constants.c;
        let rel = (at.delta_h - row.delta_h.unwrap()).abs() / row.delta_h.unwrap();
        assert!(rel <= 1e-6f64.max(tau_b_omega * row.n.unwrap() as f64), "{rel}");
    }

    #[test]
    fn response_rejects_baseline_mismatch() {
        let constraints = RunConfig::default().search_constraints().unwrap();
        let cmp = compare_with_analytic(&constraints, &[1.0]).unwrap();
        let row = NumericRow::from(&cmp[0]);
        let config = RunConfig {
            baseline_m: 200.0,
            ..RunConfig::default()
        };
        assert!(matches!(response_rows(&config, &row), Err(Error::Validation { .. })));
    }
}
