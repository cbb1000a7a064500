//! Closed-form optima of the sensitivity with the interferometer time tied to
//! the fountain time (Q = ξ√ℓ) and arm separation neglected.
//!
//! With M = (N_P − 1)/2 and s = √ℓ the strain uncertainty is proportional to
//! the inverse of
//!
//! ```text
//! F(s, M) = (1 − λ)^M · (1 − s²) · (ξ s + M)
//! ```
//!
//! `ln F` is jointly concave in (s, M) and the constraints Q ≥ 1 (s ≥ 1/ξ) and
//! N ≥ 2 (M ≥ 3ξs) are half-planes, so the constrained optimum is the
//! stationary point when it is feasible and otherwise lies on one of the two
//! edges or at their corner. [`select_regime`] evaluates every candidate.
//!
//! Q and N are continuous here; integer schemes are the job of
//! [`crate::numeric`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::golden;
use crate::model::{xi_at_frequency, AtomSpecies, NoiseBudget};
use crate::noise::phase_uncertainty;

/// Golden-section settings for the N = 2 edge.
pub const N2_LOWER: f64 = 1e-12;
pub const N2_UPPER: f64 = 1.0 - 1e-12;
pub const N2_TOLERANCE: f64 = 1e-10;
pub const N2_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Interior,
    #[serde(rename = "Q1_clamped")]
    Q1Clamped,
    #[serde(rename = "N2_clamped")]
    N2Clamped,
    Lossless,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::Q1Clamped => "Q1_clamped",
            Regime::N2Clamped => "N2_clamped",
            Regime::Lossless => "lossless",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A continuous optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOptimum {
    pub rel_height: f64,
    pub total_pulses: f64,
    pub diamonds: f64,
    pub lmt_order: f64,
    pub regime: Regime,
    pub xi: f64,
    /// F(s, M) above; Δh is proportional to its inverse.
    pub figure_of_merit: f64,
}

impl AnalyticOptimum {
    /// Strain uncertainty ΔΦ(N_P)/(2kLNQ) of this configuration with L = B(1 − ℓ).
    pub fn delta_h(&self, noise: &NoiseBudget, wave_number: f64, baseline: f64) -> Result<f64> {
        let dphi = phase_uncertainty(noise, self.total_pulses.max(1.0))?;
        let separation = baseline * (1.0 - self.rel_height);
        Ok(dphi / (2.0 * wave_number * separation * self.lmt_order * self.diamonds))
    }

    pub fn fountain_height(&self, baseline: f64) -> f64 {
        self.rel_height * baseline
    }
}

/// Boundaries of the regions where the analytic optimum leaves the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBoundaries {
    pub f_min_resonant: f64,
    pub lambda_bottom_q1: f64,
    pub lambda_bottom_highf: f64,
}

/// ln(1 − λ).
fn log_survival(loss: f64) -> f64 {
    (-loss).ln_1p()
}

fn check_lossy(loss: f64) -> Result<()> {
    if loss == 0.0 {
        return Err(Error::LosslessRequiresFixedPulses);
    }
    if !(loss > 0.0 && loss < 1.0) {
        return Err(Error::domain(format!("loss per pulse must lie in (0, 1), got {loss}")));
    }
    Ok(())
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::domain(format!("xi must be positive, got {xi}")));
    }
    Ok(())
}

/// F(s, M) for a continuous configuration; `loss` = 0 drops the survival factor.
pub fn figure_of_merit(loss: f64, xi: f64, rel_height: f64, total_pulses: f64) -> f64 {
    let s = rel_height.sqrt();
    let m = (total_pulses - 1.0) / 2.0;
    let survival = if loss > 0.0 {
        (m * log_survival(loss)).exp()
    } else {
        1.0
    };
    survival * (1.0 - rel_height) * (xi * s + m)
}

/// Optimal relative height at the stationary point,
/// √ℓ = r + √(r² + 1) with r = 1/(ξ ln(1 − λ)).
pub fn optimal_height_lossy(xi: f64, loss: f64) -> Result<f64> {
    check_lossy(loss)?;
    check_xi(xi)?;
    let r = 1.0 / (xi * log_survival(loss));
    // r < 0: the conjugate form avoids cancelling r against the root
    let s = 1.0 / ((r * r + 1.0).sqrt() - r);
    Ok(s * s)
}

/// Optimal total pulse count at the stationary point,
/// N_P = −4/ln(1−λ) − 2√(1/ln²(1−λ) + ξ²) + 1.
pub fn optimal_np_exact(loss: f64, xi: f64) -> Result<f64> {
    check_lossy(loss)?;
    if !(xi >= 0.0) {
        return Err(Error::domain(format!("xi must be non-negative, got {xi}")));
    }
    let inv = 1.0 / log_survival(loss);
    Ok(-4.0 * inv - 2.0 * (inv * inv + xi * xi).sqrt() + 1.0)
}

/// Small-loss expansion N_P ≈ 2/λ + (−1/6 − ξ²)λ.
pub fn approx_np(loss: f64, xi: f64) -> Result<f64> {
    if !(loss > 0.0 && loss < 1.0) {
        return Err(Error::domain(format!("loss per pulse must lie in (0, 1), got {loss}")));
    }
    Ok(2.0 / loss + (-1.0 / 6.0 - xi * xi) * loss)
}

/// Continuous number of diamonds at the stationary point, Q = ξ√ℓ.
pub fn optimal_q_from_xi(loss: f64, xi: f64) -> Result<f64> {
    check_lossy(loss)?;
    let inv = 1.0 / log_survival(loss);
    // inv + √(inv² + ξ²), rewritten without cancellation
    Ok(xi * xi / ((inv * inv + xi * xi).sqrt() - inv))
}

/// Q = 1/ln(1−λ) + √(1/ln²(1−λ) + 8Bf²/g).
pub fn optimal_q_lossy(loss: f64, baseline: f64, frequency: f64, g: f64) -> Result<f64> {
    optimal_q_from_xi(loss, xi_at_frequency(baseline, frequency, g)?)
}

fn lmt_from_pulses(total_pulses: f64, diamonds: f64) -> f64 {
    (total_pulses - 1.0 + 2.0 * diamonds) / (4.0 * diamonds)
}

/// Stationary point of F, without checking Q ≥ 1 or N ≥ 2.
pub fn optimum_interior(loss: f64, xi: f64) -> Result<AnalyticOptimum> {
    let rel_height = optimal_height_lossy(xi, loss)?;
    let total_pulses = optimal_np_exact(loss, xi)?;
    let diamonds = xi * rel_height.sqrt();
    Ok(AnalyticOptimum {
        rel_height,
        total_pulses,
        diamonds,
        lmt_order: lmt_from_pulses(total_pulses, diamonds),
        regime: Regime::Interior,
        xi,
        figure_of_merit: figure_of_merit(loss, xi, rel_height, total_pulses),
    })
}

/// Single-diamond edge: √ℓ = 1/ξ and N_P = −2/ln(1−λ) − 1.
pub fn optimum_q1_regime(loss: f64, xi: f64) -> Result<AnalyticOptimum> {
    check_lossy(loss)?;
    check_xi(xi)?;
    if xi < 1.0 {
        return Err(Error::BelowResonantCutoff { xi });
    }
    let rel_height = 1.0 / (xi * xi);
    let total_pulses = -2.0 / log_survival(loss) - 1.0;
    Ok(AnalyticOptimum {
        rel_height,
        total_pulses,
        diamonds: 1.0,
        lmt_order: (total_pulses + 1.0) / 4.0,
        regime: Regime::Q1Clamped,
        xi,
        figure_of_merit: figure_of_merit(loss, xi, rel_height, total_pulses),
    })
}

/// N = 2 edge: maximize 4ξ√ℓ (1−λ)^{3ξ√ℓ} (1−ℓ) over ℓ ∈ (0, 1), with
/// N_P − 1 = 6ξ√ℓ. `loss` may be zero here.
pub fn optimum_n2_regime(loss: f64, xi: f64) -> Result<AnalyticOptimum> {
    if !(0.0..1.0).contains(&loss) {
        return Err(Error::domain(format!("loss per pulse must lie in [0, 1), got {loss}")));
    }
    check_xi(xi)?;
    let a = log_survival(loss);
    let log_objective =
        |ell: f64| (4.0 * xi * ell.sqrt()).ln() + 3.0 * xi * ell.sqrt() * a + (1.0 - ell).ln();
    let best = golden::maximize(log_objective, N2_LOWER, N2_UPPER, N2_TOLERANCE, N2_MAX_ITER)?;
    let rel_height = best.x;
    let diamonds = xi * rel_height.sqrt();
    let total_pulses = 6.0 * diamonds + 1.0;
    Ok(AnalyticOptimum {
        rel_height,
        total_pulses,
        diamonds,
        lmt_order: 2.0,
        regime: Regime::N2Clamped,
        xi,
        figure_of_merit: figure_of_merit(loss, xi, rel_height, total_pulses),
    })
}

/// Optimal relative height for a fixed pulse count without loss,
/// √ℓ = √(1/3 + m²) − m with m = (N_P − 1)/(6ξ).
pub fn optimal_height_lossless(total_pulses: f64, xi: f64) -> Result<f64> {
    if !(total_pulses >= 1.0) {
        return Err(Error::domain(format!("N_P must be at least 1, got {total_pulses}")));
    }
    check_xi(xi)?;
    let m = (total_pulses - 1.0) / (6.0 * xi);
    let s = (1.0 / 3.0) / ((1.0 / 3.0 + m * m).sqrt() + m);
    Ok(s * s)
}

/// Lossless optimum at fixed N_P with Q ≥ 1 and N ≥ 2 enforced by clamping √ℓ
/// into [1/ξ, (N_P − 1)/(6ξ)].
pub fn optimum_lossless(total_pulses: f64, xi: f64) -> Result<AnalyticOptimum> {
    let free = optimal_height_lossless(total_pulses, xi)?.sqrt();
    let s_min = 1.0 / xi;
    let s_max = (total_pulses - 1.0) / (6.0 * xi);
    if s_min > s_max || s_min >= 1.0 {
        return Err(if xi < 1.0 {
            Error::BelowResonantCutoff { xi }
        } else {
            Error::domain(format!(
                "N_P = {total_pulses} too small for Q >= 1 and N >= 2"
            ))
        });
    }
    let (s, regime) = if free < s_min {
        (s_min, Regime::Q1Clamped)
    } else if free > s_max {
        (s_max, Regime::N2Clamped)
    } else {
        (free, Regime::Lossless)
    };
    let rel_height = s * s;
    let diamonds = if regime == Regime::Q1Clamped { 1.0 } else { xi * s };
    let lmt_order = if regime == Regime::N2Clamped {
        2.0
    } else {
        lmt_from_pulses(total_pulses, diamonds)
    };
    Ok(AnalyticOptimum {
        rel_height,
        total_pulses,
        diamonds,
        lmt_order,
        regime,
        xi,
        figure_of_merit: figure_of_merit(0.0, xi, rel_height, total_pulses),
    })
}

/// Best continuous configuration at frequency `f` subject to Q ≥ 1 and N ≥ 2.
///
/// With `loss` > 0 the pulse count is optimized; with `loss` = 0 it must be
/// supplied through `fixed_pulses`. Among valid candidates the largest figure
/// of merit (smallest Δh) wins and exact ties go to the interior solution.
pub fn select_regime(
    loss: f64,
    baseline: f64,
    frequency: f64,
    g: f64,
    fixed_pulses: Option<f64>,
) -> Result<AnalyticOptimum> {
    if !(0.0..1.0).contains(&loss) {
        return Err(Error::domain(format!("loss per pulse must lie in [0, 1), got {loss}")));
    }
    let xi = xi_at_frequency(baseline, frequency, g)?;
    if loss == 0.0 {
        let np = fixed_pulses.ok_or(Error::LosslessRequiresFixedPulses)?;
        return optimum_lossless(np, xi);
    }
    if xi < 1.0 {
        return Err(Error::BelowResonantCutoff { xi });
    }

    let mut candidates = Vec::with_capacity(3);
    let interior = optimum_interior(loss, xi)?;
    if interior.diamonds >= 1.0 && interior.lmt_order >= 2.0 {
        candidates.push(interior);
    }
    let mut q1 = optimum_q1_regime(loss, xi)?;
    if q1.total_pulses < 7.0 {
        // corner Q = 1, N = 2
        q1.total_pulses = 7.0;
        q1.lmt_order = 2.0;
        q1.figure_of_merit = figure_of_merit(loss, xi, q1.rel_height, 7.0);
    }
    candidates.push(q1);
    let n2 = optimum_n2_regime(loss, xi)?;
    if n2.diamonds >= 1.0 {
        candidates.push(n2);
    }

    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.figure_of_merit > best.figure_of_merit {
            best = *c;
        }
    }
    Ok(best)
}

/// f_min = √(g/(8B)), below which a single diamond no longer fits the baseline.
pub fn min_resonant_frequency(baseline: f64, g: f64) -> Result<f64> {
    if !(baseline > 0.0 && g > 0.0) {
        return Err(Error::domain(format!("B and g must be positive, got {baseline}, {g}")));
    }
    Ok((g / (8.0 * baseline)).sqrt())
}

/// Loss thresholds above which the analytic optimum keeps the lower arm off the
/// bottom of the baseline: λ > f/η for a single diamond and
/// λ > [8/η (g/(8B))³ f⁻⁵]^{1/4} in the multi-diamond regime.
pub fn bottom_constraint_thresholds(
    frequency: f64,
    baseline: f64,
    species: &AtomSpecies,
    g: f64,
) -> Result<RegimeBoundaries> {
    if !(frequency > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {frequency}")));
    }
    let f_min_resonant = min_resonant_frequency(baseline, g)?;
    let eta = species.eta();
    let scale = g / (8.0 * baseline);
    Ok(RegimeBoundaries {
        f_min_resonant,
        lambda_bottom_q1: frequency / eta,
        lambda_bottom_highf: (8.0 / eta * scale.powi(3) * frequency.powi(-5)).powf(0.25),
    })
}
