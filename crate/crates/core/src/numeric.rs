//! Integer optimization of the resonant-mode scheme at each frequency: number
//! of diamonds Q, LMT order N (even), launch kinematics and the split of the
//! baseline into fountain height H and separation L = B − H.
//!
//! For fixed Q the objective
//!
//! ```text
//! Δh(N) = ΔΦ(N_P) · a / (2kQ · L(N) · |sin(aN)|),   a = ωτ_B
//! ```
//!
//! is log-convex in N on every lobe aN ∈ [mπ, (m+1)π]: ln ΔΦ is affine in N,
//! −ln L is convex because the required height is convex in the kick N·v_r,
//! and −ln|sin| is convex on a lobe. Each lobe is searched by integer ternary
//! search with a local exhaustive polish, and lobes (and values of Q) whose
//! lower bound cannot beat the incumbent are skipped. The result is the same
//! argmin an exhaustive scan over all admissible (Q, N) returns.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{select_regime, AnalyticOptimum};
use crate::error::{Error, Result};
use crate::model::{
    resonant_interrogation_time, xi_at_frequency, AtomSpecies, NoiseBudget, PhysicalConstants,
    PulseCounts,
};
use crate::noise::phase_uncertainty;
use crate::trajectory::{min_required_height, CONFINEMENT_TOLERANCE};

/// Neighbourhood scanned exhaustively around the ternary-search result.
const POLISH_RADIUS: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConstraints {
    pub baseline: f64,
    pub species: AtomSpecies,
    pub noise: NoiseBudget,
    pub constants: PhysicalConstants,
    /// Total-pulse budget; admissible schemes satisfy N ≤ 0.5 + (np_max − 1)/(4Q),
    /// i.e. N_P ≤ np_max.
    pub np_max: u64,
    pub q_max: u32,
    pub enforce_arm_separation: bool,
    pub enforce_even_n: bool,
}

impl SearchConstraints {
    pub fn validate(&self) -> Result<()> {
        if !(self.baseline.is_finite() && self.baseline > 0.0) {
            return Err(Error::validation("baseline_m", "must be positive"));
        }
        if self.np_max < 7 {
            return Err(Error::validation("np_max", "must be at least 7"));
        }
        if self.q_max < 1 {
            return Err(Error::validation("q_max", "must be at least 1"));
        }
        self.constants.validate()?;
        self.noise.validate()
    }

    fn min_lmt_order(&self) -> u64 {
        if self.enforce_even_n {
            2
        } else {
            1
        }
    }

    /// Largest admissible N for `diamonds`, or `None` when there is none.
    pub fn max_lmt_order(&self, diamonds: u32) -> Option<u64> {
        let q = u64::from(diamonds);
        // 4QN − 2Q + 1 ≤ np_max
        let mut n = (self.np_max + 2 * q - 1) / (4 * q);
        if self.enforce_even_n {
            n -= n % 2;
        }
        (n >= self.min_lmt_order()).then_some(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingTag {
    /// N sits at the largest value the pulse budget allows for this Q.
    NpBudget,
    /// Q sits at the configured maximum.
    QCap,
    /// The arm separation enlarges the window beyond the plain fountain.
    ArmSeparation,
    /// The launch point is above the bottom of the window.
    RaisedLaunch,
}

impl BindingTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BindingTag::NpBudget => "np_budget",
            BindingTag::QCap => "q_cap",
            BindingTag::ArmSeparation => "arm_separation",
            BindingTag::RaisedLaunch => "raised_launch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumRecord {
    pub frequency: f64,
    pub delta_h: f64,
    pub diamonds: u32,
    pub lmt_order: u64,
    pub total_pulses: u64,
    pub rel_height: f64,
    pub fountain_height: f64,
    pub separation: f64,
    pub z0: f64,
    pub v0: f64,
    pub interrogation_time: f64,
    pub total_time: f64,
    pub binding: Vec<BindingTag>,
}

impl OptimumRecord {
    pub fn binding_label(&self) -> String {
        if self.binding.is_empty() {
            "none".to_owned()
        } else {
            self.binding
                .iter()
                .map(BindingTag::as_str)
                .collect::<Vec<_>>()
                .join("|")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibleReason {
    BelowCutoff,
    NoFeasibleScheme,
}

impl InfeasibleReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            InfeasibleReason::BelowCutoff => "infeasible:below_cutoff",
            InfeasibleReason::NoFeasibleScheme => "infeasible:no_feasible_scheme",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfeasiblePoint {
    pub frequency: f64,
    pub f_min: f64,
    pub reason: InfeasibleReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepPoint {
    Optimum(OptimumRecord),
    Infeasible(InfeasiblePoint),
}

impl SweepPoint {
    pub fn frequency(&self) -> f64 {
        match self {
            SweepPoint::Optimum(r) => r.frequency,
            SweepPoint::Infeasible(p) => p.frequency,
        }
    }

    pub fn optimum(&self) -> Option<&OptimumRecord> {
        match self {
            SweepPoint::Optimum(r) => Some(r),
            SweepPoint::Infeasible(_) => None,
        }
    }
}

/// Per-frequency quantities shared by all (Q, N) evaluations.
struct Context<'a> {
    c: &'a SearchConstraints,
    t: f64,
    g: f64,
    k: f64,
    recoil: f64,
    /// ωτ_B
    a: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    diamonds: u32,
    lmt_order: u64,
    total_pulses: u64,
    height: f64,
    z0: f64,
    v0: f64,
    delta_h: f64,
}

impl Context<'_> {
    fn proxy_height(&self, diamonds: u32) -> f64 {
        let qt = f64::from(diamonds) * self.t;
        0.5 * self.g * qt * qt
    }

    fn phase(&self, total_pulses: u64) -> Result<f64> {
        phase_uncertainty(&self.c.noise, total_pulses as f64)
    }

    /// Objective and witness for (Q, N); `None` marks an infeasible scheme.
    fn evaluate(&self, diamonds: u32, lmt_order: u64) -> Result<Option<Candidate>> {
        let counts = PulseCounts {
            diamonds,
            lmt_order: u32::try_from(lmt_order)
                .map_err(|_| Error::domain(format!("N = {lmt_order} out of range")))?,
        };
        let total_pulses = counts.total_pulses();
        let (height, z0, v0) = if self.c.enforce_arm_separation {
            let r = min_required_height(diamonds, counts.lmt_order, self.t, self.recoil, self.g)?;
            (r.height, r.z0, r.v0)
        } else {
            (self.proxy_height(diamonds), 0.0, self.g * f64::from(diamonds) * self.t)
        };
        let separation = self.c.baseline - height;
        if !(separation > 0.0) {
            return Ok(None);
        }
        let response = (self.a * lmt_order as f64).sin().abs() / self.a;
        if !(response > 0.0) {
            return Ok(None);
        }
        let dphi = match self.phase(total_pulses) {
            Ok(v) => v,
            Err(Error::NoAtomsSurvive { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let delta_h =
            dphi / (2.0 * self.k * separation * f64::from(diamonds) * response);
        if !delta_h.is_finite() {
            return Ok(None);
        }
        Ok(Some(Candidate {
            diamonds,
            lmt_order,
            total_pulses,
            height,
            z0,
            v0,
            delta_h,
        }))
    }

    /// Lower bound on Δh for any N ≥ `n_from` at this Q.
    fn lower_bound(&self, diamonds: u32, n_from: u64) -> Result<f64> {
        let separation = self.c.baseline - self.proxy_height(diamonds);
        if !(separation > 0.0) {
            return Ok(f64::INFINITY);
        }
        let q = u64::from(diamonds);
        let np = 4 * q * n_from - 2 * q + 1;
        let dphi = match self.phase(np) {
            Ok(v) => v,
            Err(Error::NoAtomsSurvive { .. }) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        let n_max = self.c.max_lmt_order(diamonds).unwrap_or(n_from) as f64;
        // N|sinc(aN)| ≤ min(N_max, 1/a)
        let response = n_max.min(1.0 / self.a);
        Ok(dphi / (2.0 * self.k * separation * f64::from(diamonds) * response))
    }

    fn best_for_q(&self, diamonds: u32, incumbent: f64) -> Result<Option<Candidate>> {
        let Some(n_max) = self.c.max_lmt_order(diamonds) else {
            return Ok(None);
        };
        let n_min = self.c.min_lmt_order();
        let step = if self.c.enforce_even_n { 2 } else { 1 };
        let mut cache: HashMap<u64, Option<Candidate>> = HashMap::new();
        let mut best: Option<Candidate> = None;
        let mut bound = incumbent;

        let mut lobe = 0u64;
        loop {
            // N range of lobe aN ∈ [mπ, (m+1)π], snapped to the admissible lattice
            let lo_real = (lobe as f64 * PI / self.a).ceil().max(n_min as f64);
            if lo_real > n_max as f64 {
                break;
            }
            let hi_real = (((lobe + 1) as f64) * PI / self.a).floor().min(n_max as f64);
            let lo = snap_up(lo_real as u64, n_min, step);
            let hi = snap_down(hi_real as u64, n_min, step);
            lobe += 1;
            if lo > hi {
                continue;
            }
            if self.lower_bound(diamonds, lo)? >= bound {
                // the bound grows with N, so later lobes cannot do better
                break;
            }
            let count = (hi - lo) / step;
            let mut value = |i: u64| -> Result<f64> {
                let n = lo + i * step;
                let cand = match cache.get(&n) {
                    Some(c) => *c,
                    None => {
                        let c = self.evaluate(diamonds, n)?;
                        cache.insert(n, c);
                        c
                    }
                };
                Ok(cand.map_or(f64::INFINITY, |c| c.delta_h))
            };
            let (idx, _) = convex_argmin(0, count, &mut value)?;
            let n = lo + idx * step;
            if let Some(c) = cache.get(&n).copied().flatten() {
                let better = match best {
                    None => true,
                    Some(b) => c.delta_h < b.delta_h,
                };
                if better {
                    best = Some(c);
                    bound = bound.min(c.delta_h);
                }
            }
            if hi_real >= n_max as f64 {
                break;
            }
        }
        Ok(best)
    }
}

fn snap_up(n: u64, n_min: u64, step: u64) -> u64 {
    let n = n.max(n_min);
    n_min + (n - n_min).div_ceil(step) * step
}

fn snap_down(n: u64, n_min: u64, step: u64) -> u64 {
    if n < n_min {
        return 0;
    }
    n_min + (n - n_min) / step * step
}

/// Integer argmin of a convex function on [lo, hi] (values may be +∞ on a
/// tail). Smallest index wins ties.
fn convex_argmin<F>(lo: u64, hi: u64, f: &mut F) -> Result<(u64, f64)>
where
    F: FnMut(u64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    while b - a > 4 {
        let m1 = a + (b - a) / 3;
        let m2 = b - (b - a) / 3;
        if f(m1)? <= f(m2)? {
            b = m2;
        } else {
            a = m1;
        }
    }
    let from = a.saturating_sub(POLISH_RADIUS).max(lo);
    let to = (b + POLISH_RADIUS).min(hi);
    let mut best = (from, f(from)?);
    for i in from + 1..=to {
        let v = f(i)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    Ok(best)
}

/// Best admissible scheme at `frequency`.
pub fn optimize_at_frequency(constraints: &SearchConstraints, frequency: f64) -> Result<OptimumRecord> {
    constraints.validate()?;
    let g = constraints.constants.g;
    let t = resonant_interrogation_time(frequency)?;
    let xi = xi_at_frequency(constraints.baseline, frequency, g)?;
    if xi < 1.0 {
        return Err(Error::BelowResonantCutoff { xi });
    }
    let tau_b = constraints.baseline / constraints.constants.c;
    let ctx = Context {
        c: constraints,
        t,
        g,
        k: constraints.species.wave_number(),
        recoil: constraints.species.recoil_velocity(),
        a: 2.0 * PI * frequency * tau_b,
    };
    let q_by_budget = (constraints.np_max - 1) / 6;
    let q_eff = u64::from(constraints.q_max)
        .min(q_by_budget)
        .min(xi.floor() as u64) as u32;

    let mut best: Option<Candidate> = None;
    for q in 1..=q_eff {
        let incumbent = best.map_or(f64::INFINITY, |b| b.delta_h);
        let n_start = constraints.min_lmt_order();
        if ctx.lower_bound(q, n_start)? >= incumbent {
            continue;
        }
        if let Some(c) = ctx.best_for_q(q, incumbent)? {
            if c.delta_h < incumbent {
                best = Some(c);
            }
        }
    }
    let best = best.ok_or(Error::NoFeasibleScheme {
        frequency_hz: frequency,
    })?;

    let mut binding = Vec::new();
    if constraints.max_lmt_order(best.diamonds) == Some(best.lmt_order) {
        binding.push(BindingTag::NpBudget);
    }
    if best.diamonds == constraints.q_max {
        binding.push(BindingTag::QCap);
    }
    if constraints.enforce_arm_separation
        && best.height > ctx.proxy_height(best.diamonds) + CONFINEMENT_TOLERANCE
    {
        binding.push(BindingTag::ArmSeparation);
    }
    if best.z0 > CONFINEMENT_TOLERANCE {
        binding.push(BindingTag::RaisedLaunch);
    }
    let total_time = 2.0 * f64::from(best.diamonds) * t;
    Ok(OptimumRecord {
        frequency,
        delta_h: best.delta_h,
        diamonds: best.diamonds,
        lmt_order: best.lmt_order,
        total_pulses: best.total_pulses,
        rel_height: best.height / constraints.baseline,
        fountain_height: best.height,
        separation: constraints.baseline - best.height,
        z0: best.z0,
        v0: best.v0,
        interrogation_time: t,
        total_time,
        binding,
    })
}

fn sweep_point(constraints: &SearchConstraints, frequency: f64) -> Result<SweepPoint> {
    let f_min = (constraints.constants.g / (8.0 * constraints.baseline)).sqrt();
    match optimize_at_frequency(constraints, frequency) {
        Ok(r) => Ok(SweepPoint::Optimum(r)),
        Err(Error::BelowResonantCutoff { .. }) => Ok(SweepPoint::Infeasible(InfeasiblePoint {
            frequency,
            f_min,
            reason: InfeasibleReason::BelowCutoff,
        })),
        Err(Error::NoFeasibleScheme { .. }) => Ok(SweepPoint::Infeasible(InfeasiblePoint {
            frequency,
            f_min,
            reason: InfeasibleReason::NoFeasibleScheme,
        })),
        Err(e) => Err(e),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::validation("grid", "frequency grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("grid", "frequency grid must be strictly increasing"));
    }
    if !(grid[0] > 0.0) {
        return Err(Error::validation("grid", "frequencies must be positive"));
    }
    Ok(())
}

/// One record per grid frequency, in grid order. Points are evaluated in
/// parallel on the current rayon pool.
pub fn sweep(constraints: &SearchConstraints, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    constraints.validate()?;
    check_grid(grid)?;
    grid.par_iter()
        .map(|&f| sweep_point(constraints, f))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub point: SweepPoint,
    pub analytic: Option<AnalyticOptimum>,
    pub analytic_delta_h: Option<f64>,
    /// (Δh_numeric − Δh_analytic)/Δh_analytic
    pub gap: Option<f64>,
}

/// Continuous optimum matching the noise model of `constraints`: the pulse
/// count is free with loss and pinned to the budget without.
pub fn analytic_counterpart(constraints: &SearchConstraints, frequency: f64) -> Result<AnalyticOptimum> {
    let (loss, fixed) = if constraints.noise.is_lossy() {
        (constraints.noise.loss_per_pulse, None)
    } else {
        (0.0, Some(constraints.np_max as f64))
    };
    select_regime(loss, constraints.baseline, frequency, constraints.constants.g, fixed)
}

/// Sweep paired with the analytic optimum and the relative gap.
pub fn compare_with_analytic(constraints: &SearchConstraints, grid: &[f64]) -> Result<Vec<Comparison>> {
    let points = sweep(constraints, grid)?;
    points
        .into_par_iter()
        .map(|point| {
            let analytic = analytic_counterpart(constraints, point.frequency()).ok();
            let analytic_delta_h = match analytic {
                Some(a) => Some(a.delta_h(
                    &constraints.noise,
                    constraints.species.wave_number(),
                    constraints.baseline,
                )?),
                None => None,
            };
            let gap = match (point.optimum(), analytic_delta_h) {
                (Some(r), Some(a)) => Some((r.delta_h - a) / a),
                _ => None,
            };
            Ok(Comparison {
                point,
                analytic,
                analytic_delta_h,
                gap,
            })
        })
        .collect()
}
