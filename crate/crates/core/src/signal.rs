//! Differential-phase signal amplitude of the detector pair in broadband and
//! resonant operation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DetectorGeometry, PulseScheme};

/// Half-width of the window around x = mπ in which the Dirichlet ratio is
/// evaluated from its Taylor expansion.
pub const DIRICHLET_WINDOW: f64 = 1e-6;

/// Below this |x| sinc uses its quadratic series.
pub const SINC_SERIES_CUTOFF: f64 = 1e-8;

/// Default bound on ωτ_B for the low-frequency broadband expression.
pub const DEFAULT_VALIDITY_GUARD: f64 = 0.1;

/// sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_CUTOFF {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Multi-diamond resonance kernel sin(Qx)/sin(x).
///
/// Near x = mπ the direct quotient is 0/0, so within [`DIRICHLET_WINDOW`] the
/// ratio is evaluated as (−1)^{m(Q−1)} · Q · [1 − (Q²−1)ε²/6 + (Q²−1)(3Q²−7)ε⁴/360]
/// with ε = x − mπ.
pub fn dirichlet_ratio(diamonds: u32, x: f64) -> f64 {
    if diamonds <= 1 {
        return 1.0;
    }
    let q = f64::from(diamonds);
    let m = (x / PI).round();
    let eps = x - m * PI;
    if eps.abs() < DIRICHLET_WINDOW {
        let q2m1 = q * q - 1.0;
        let e2 = eps * eps;
        let series = 1.0 - q2m1 * e2 / 6.0 + q2m1 * (3.0 * q * q - 7.0) * e2 * e2 / 360.0;
        // m(Q−1) parity decides the sign
        let odd = (m.abs() as u64 % 2 == 1) && (diamonds - 1) % 2 == 1;
        let sign = if odd { -1.0 } else { 1.0 };
        sign * q * series
    } else {
        (q * x).sin() / x.sin()
    }
}

/// Broadband amplitude together with the low-frequency validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadbandAmplitude {
    pub amplitude: f64,
    /// ωτ_B exceeded the validity guard; the value is returned but suspect.
    pub guard_exceeded: bool,
}

/// Low-frequency (ωτ_B ≪ 1) differential signal amplitude for arbitrary ω
/// with the interrogation time held at `scheme.interrogation_time`.
pub fn signal_amplitude_broadband(
    strain: f64,
    wave_number: f64,
    geometry: &DetectorGeometry,
    scheme: &PulseScheme,
    omega: f64,
) -> BroadbandAmplitude {
    signal_amplitude_broadband_with_guard(
        strain,
        wave_number,
        geometry,
        scheme,
        omega,
        DEFAULT_VALIDITY_GUARD,
    )
}

pub fn signal_amplitude_broadband_with_guard(
    strain: f64,
    wave_number: f64,
    geometry: &DetectorGeometry,
    scheme: &PulseScheme,
    omega: f64,
    guard: f64,
) -> BroadbandAmplitude {
    let tau_b = geometry.tau_baseline;
    let n = f64::from(scheme.lmt_order);
    let t = scheme.interrogation_time;
    // 4hkc/ω · L/B == 4hkL/(ωτ_B)
    let prefactor = 4.0 * strain * wave_number * geometry.separation / (omega * tau_b);
    let product = (omega * tau_b * n / 2.0).sin()
        * (omega * t / 2.0).sin()
        * (omega * (t - (n - 1.0) * tau_b) / 2.0).sin()
        * dirichlet_ratio(scheme.diamonds, omega * t);
    BroadbandAmplitude {
        amplitude: (prefactor * product).abs(),
        guard_exceeded: omega * tau_b >= guard,
    }
}

/// Resonant-mode amplitude 2hkLNQ·|sinc(ωτ_B N)|.
pub fn signal_amplitude_resonant(
    strain: f64,
    wave_number: f64,
    separation: f64,
    lmt_order: f64,
    diamonds: f64,
    omega: f64,
    tau_baseline: f64,
) -> f64 {
    (2.0 * strain * wave_number * separation * lmt_order * diamonds
        * sinc(omega * tau_baseline * lmt_order))
        .abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Broadband amplitude of a fixed configuration over a frequency grid.
pub fn response_curve(
    strain: f64,
    wave_number: f64,
    geometry: &DetectorGeometry,
    scheme: &PulseScheme,
    frequencies: &[f64],
) -> Result<Vec<ResponsePoint>> {
    if frequencies.is_empty() {
        return Err(Error::domain("response curve needs a non-empty frequency grid"));
    }
    if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("frequency grid must be strictly increasing"));
    }
    if !(frequencies[0] > 0.0) {
        return Err(Error::domain("frequencies must be positive"));
    }
    Ok(frequencies
        .iter()
        .map(|&f| ResponsePoint {
            frequency: f,
            amplitude: signal_amplitude_broadband(
                strain,
                wave_number,
                geometry,
                scheme,
                2.0 * PI * f,
            )
            .amplitude,
        })
        .collect())
}
