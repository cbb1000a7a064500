//! Output tables. Each row type serializes to CSV (header from the column
//! names) and to JSON (an array of objects with the same keys).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticOptimum;
use crate::config::OutputFormat;
use crate::error::{Error, Result};
use crate::numeric::{Comparison, SweepPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRow {
    pub f_hz: f64,
    pub delta_h: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<u32>,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[serde(rename = "NP")]
    pub np: Option<u64>,
    pub ell: Option<f64>,
    #[serde(rename = "H_m")]
    pub h_m: Option<f64>,
    #[serde(rename = "L_m")]
    pub l_m: Option<f64>,
    pub z0_m: Option<f64>,
    pub v0_mps: Option<f64>,
    #[serde(rename = "T_s")]
    pub t_s: f64,
    #[serde(rename = "TAI_s")]
    pub tai_s: Option<f64>,
    pub binding: String,
    pub analytic_delta_h: Option<f64>,
    pub gap_rel: Option<f64>,
}

impl From<&Comparison> for NumericRow {
    fn from(c: &Comparison) -> Self {
        let f = c.point.frequency();
        let mut row = NumericRow {
            f_hz: f,
            delta_h: None,
            q: None,
            n: None,
            np: None,
            ell: None,
            h_m: None,
            l_m: None,
            z0_m: None,
            v0_mps: None,
            t_s: 0.5 / f,
            tai_s: None,
            binding: String::new(),
            analytic_delta_h: c.analytic_delta_h,
            gap_rel: c.gap,
        };
        match &c.point {
            SweepPoint::Optimum(r) => {
                row.delta_h = Some(r.delta_h);
                row.q = Some(r.diamonds);
                row.n = Some(r.lmt_order);
                row.np = Some(r.total_pulses);
                row.ell = Some(r.rel_height);
                row.h_m = Some(r.fountain_height);
                row.l_m = Some(r.separation);
                row.z0_m = Some(r.z0);
                row.v0_mps = Some(r.v0);
                row.tai_s = Some(r.total_time);
                row.binding = r.binding_label();
            }
            SweepPoint::Infeasible(p) => {
                row.binding = format!("{};f_min_hz={}", p.reason.as_str(), p.f_min);
            }
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub f_hz: f64,
    #[serde(rename = "NP")]
    pub np: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub ell: Option<f64>,
    pub regime: String,
}

impl AnalyticRow {
    pub fn new(f_hz: f64, optimum: Result<AnalyticOptimum>) -> Result<Self> {
        match optimum {
            Ok(o) => Ok(Self {
                f_hz,
                np: Some(o.total_pulses),
                q: Some(o.diamonds),
                n: Some(o.lmt_order),
                ell: Some(o.rel_height),
                regime: o.regime.as_str().to_owned(),
            }),
            Err(Error::BelowResonantCutoff { .. }) => Ok(Self {
                f_hz,
                np: None,
                q: None,
                n: None,
                ell: None,
                regime: "below_cutoff".to_owned(),
            }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub f_hz: f64,
    pub f_min_hz: f64,
    pub lambda_bottom_q1: f64,
    pub lambda_bottom_highf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub f_hz: f64,
    pub delta_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t_s: f64,
    pub z_lower_m: f64,
    pub z_upper_m: f64,
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::validation("output", e.to_string())
}

/// Writes rows as CSV with a header, or as a pretty JSON array.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(io_error)?;
            }
            w.flush().map_err(io_error)?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(io_error)?;
            writeln!(out).map_err(io_error)?;
        }
    }
    Ok(())
}

pub fn rows_to_string<T: Serialize>(rows: &[T], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    String::from_utf8(buf).map_err(io_error)
}
