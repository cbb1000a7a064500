//! Shot-noise budget under per-pulse atom loss and the resulting strain
//! uncertainty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NoiseBudget, PhaseNoise};
use crate::signal::sinc;

/// |sinc| below this is treated as a response null.
pub const SINC_NULL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainUncertainty {
    /// Δh, in 1/√Hz when the phase uncertainty carries a √Hz normalization.
    pub delta_h: f64,
    pub phase_uncertainty: f64,
    /// Detected atoms; absent when ΔΦ is fixed directly.
    pub detected_atoms: Option<f64>,
}

/// Natural log of N₀(1−λ)^{N_P}.
fn log_detected_atoms(initial_atoms: f64, loss: f64, total_pulses: f64) -> f64 {
    initial_atoms.ln() + total_pulses * (-loss).ln_1p()
}

/// N_at = N₀(1−λ)^{N_P}.
pub fn detected_atoms(initial_atoms: f64, loss: f64, total_pulses: f64) -> Result<f64> {
    if !(initial_atoms > 0.0) {
        return Err(Error::domain(format!("N0 must be positive, got {initial_atoms}")));
    }
    if !(0.0..1.0).contains(&loss) {
        return Err(Error::domain(format!("loss per pulse must lie in [0, 1), got {loss}")));
    }
    if !(total_pulses >= 1.0) {
        return Err(Error::domain(format!("N_P must be at least 1, got {total_pulses}")));
    }
    Ok(initial_atoms * (total_pulses * (-loss).ln_1p()).exp())
}

/// ΔΦ for a given total pulse count. Returns the fixed value unchanged when
/// the budget specifies one.
pub fn phase_uncertainty(noise: &NoiseBudget, total_pulses: f64) -> Result<f64> {
    Ok(phase_and_atoms(noise, total_pulses)?.0)
}

fn phase_and_atoms(noise: &NoiseBudget, total_pulses: f64) -> Result<(f64, Option<f64>)> {
    match noise.phase {
        PhaseNoise::Fixed { phase_uncertainty } => Ok((phase_uncertainty, None)),
        PhaseNoise::ShotNoise {
            contrast,
            repetitions,
            initial_atoms,
        } => {
            let atoms = detected_atoms(initial_atoms, noise.loss_per_pulse, total_pulses)?;
            if !(atoms > 0.0) || !atoms.is_normal() {
                return Err(Error::NoAtomsSurvive {
                    log_atoms: log_detected_atoms(initial_atoms, noise.loss_per_pulse, total_pulses),
                });
            }
            let dphi = (2.0 / (repetitions * atoms * contrast * contrast)).sqrt();
            Ok((dphi, Some(atoms)))
        }
    }
}

/// Δh = ΔΦ/(2kLNQ·|sinc(x)|); the sinc factor is dropped when `sinc_arg` is `None`.
pub fn strain_uncertainty(
    noise: &NoiseBudget,
    wave_number: f64,
    separation: f64,
    lmt_order: f64,
    diamonds: f64,
    total_pulses: f64,
    sinc_arg: Option<f64>,
) -> Result<StrainUncertainty> {
    if !(separation > 0.0) {
        return Err(Error::domain(format!("separation L must be positive, got {separation}")));
    }
    if !(lmt_order >= 1.0 && diamonds >= 1.0) {
        return Err(Error::domain(format!(
            "N and Q must be at least 1, got N = {lmt_order}, Q = {diamonds}"
        )));
    }
    let (dphi, atoms) = phase_and_atoms(noise, total_pulses)?;
    let response = match sinc_arg {
        Some(x) => {
            let s = sinc(x).abs();
            if s < SINC_NULL_THRESHOLD {
                return Err(Error::SignalNull { argument: x });
            }
            s
        }
        None => 1.0,
    };
    let delta_h = dphi / (2.0 * wave_number * separation * lmt_order * diamonds * response);
    Ok(StrainUncertainty {
        delta_h,
        phase_uncertainty: dphi,
        detected_atoms: atoms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn shot(loss: f64, c: f64, nu: f64, n0: f64) -> NoiseBudget {
        NoiseBudget::shot_noise(loss, c, nu, n0).unwrap()
    }

    #[test]
    fn detected_atoms_examples() {
        for np in [1.0, 17.0, 1e5] {
            assert_eq!(detected_atoms(1e6, 0.0, np).unwrap(), 1e6);
        }
        // 50-digit reference: 1e6 · 0.9989^1800
        assert_relative_eq!(
            detected_atoms(1e6, 1.1e-3, 1800.0).unwrap(),
            137_918.851_518_368_6,
            max_relative = 1e-12
        );
        assert_relative_eq!(detected_atoms(1e6, 0.2, 1.0).unwrap(), 8e5, max_relative = 1e-15);
        assert!(detected_atoms(1e6, 1.0, 10.0).is_err());
        assert!(detected_atoms(0.0, 0.1, 10.0).is_err());
    }

    #[test]
    fn detected_atoms_strictly_decrease_with_pulses() {
        let mut prev = f64::INFINITY;
        for np in 1..200 {
            let n = detected_atoms(1e6, 1e-3, np as f64).unwrap();
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn phase_uncertainty_examples() {
        // C = 1, ν = 1, N_at = 2 → ΔΦ = 1
        assert_relative_eq!(phase_uncertainty(&shot(0.0, 1.0, 1.0, 2.0), 10.0).unwrap(), 1.0);
        let fixed = NoiseBudget {
            loss_per_pulse: 0.3,
            phase: PhaseNoise::Fixed {
                phase_uncertainty: 1e-5,
            },
        };
        assert_eq!(phase_uncertainty(&fixed, 1.0).unwrap(), 1e-5);
        assert_eq!(phase_uncertainty(&fixed, 1e7).unwrap(), 1e-5);
        let full = phase_uncertainty(&shot(1e-3, 0.8, 3.0, 1e6), 500.0).unwrap();
        let half = phase_uncertainty(&shot(1e-3, 0.4, 3.0, 1e6), 500.0).unwrap();
        assert_relative_eq!(half, 2.0 * full, max_relative = 1e-14);
    }

    #[test]
    fn vanishing_atom_number_is_an_error() {
        let err = phase_uncertainty(&shot(0.5, 1.0, 1.0, 1e6), 1e5).unwrap_err();
        assert!(matches!(err, Error::NoAtomsSurvive { .. }));
    }

    #[test]
    fn strain_uncertainty_examples() {
        let k = 2.0 * PI / 698.4e-9;
        let fixed = NoiseBudget::fixed(1e-3).unwrap();
        let dh = strain_uncertainty(&fixed, k, 100.0, 100.0, 1.0, 397.0, None).unwrap();
        assert_relative_eq!(dh.delta_h, 5.557_690_612_768_985e-15, max_relative = 1e-12);
        assert!((dh.delta_h - 5.3e-15).abs() / 5.3e-15 <= 0.10);

        let dh2 = strain_uncertainty(&fixed, k, 200.0, 100.0, 1.0, 397.0, None).unwrap();
        assert_relative_eq!(dh2.delta_h, dh.delta_h / 2.0, max_relative = 1e-15);

        // lossless shot noise matches the equivalent fixed ΔΦ
        let (c, nu, n0): (f64, f64, f64) = (0.7, 4.0, 2.5e5);
        let equivalent = NoiseBudget::fixed((2.0 / (nu * n0 * c * c)).sqrt()).unwrap();
        let a = strain_uncertainty(&shot(0.0, c, nu, n0), k, 80.0, 10.0, 3.0, 115.0, None).unwrap();
        let b = strain_uncertainty(&equivalent, k, 80.0, 10.0, 3.0, 115.0, None).unwrap();
        assert_relative_eq!(a.delta_h, b.delta_h, max_relative = 1e-14);
        assert_eq!(a.detected_atoms, Some(n0));
    }

    #[test]
    fn sinc_null_is_reported() {
        let fixed = NoiseBudget::fixed(1e-3).unwrap();
        let err = strain_uncertainty(&fixed, 9e6, 100.0, 10.0, 1.0, 37.0, Some(PI)).unwrap_err();
        assert!(matches!(err, Error::SignalNull { .. }));
        let with = strain_uncertainty(&fixed, 9e6, 100.0, 10.0, 1.0, 37.0, Some(0.5)).unwrap();
        let without = strain_uncertainty(&fixed, 9e6, 100.0, 10.0, 1.0, 37.0, None).unwrap();
        assert_relative_eq!(with.delta_h, without.delta_h / sinc(0.5), max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn error_propagation_identity(
            dphi in 1e-8f64..1.0,
            l in 1.0f64..2000.0,
            n in 1.0f64..1e5,
            q in 1.0f64..100.0,
        ) {
            let k = 9e6;
            let noise = NoiseBudget::fixed(dphi).unwrap();
            let dh = strain_uncertainty(&noise, k, l, n, q, 100.0, None).unwrap();
            let back = dh.delta_h * (2.0 * k * l * n * q);
            prop_assert!(((back - dphi) / dphi).abs() < 1e-14);
        }

        #[test]
        fn strain_decreases_in_each_resource(
            which in 0usize..6,
            factor in 1.01f64..3.0,
            loss in 0.0f64..1e-2,
        ) {
            let k = 9e6;
            let mut p = [50.0, 40.0, 3.0, 0.5, 2.0, 1e6]; // L, N, Q, C, ν, N₀
            let eval = |p: &[f64; 6]| {
                let c = p[3].min(1.0);
                let noise = NoiseBudget::shot_noise(loss, c, p[4], p[5]).unwrap();
                strain_uncertainty(&noise, k, p[0], p[1], p[2], 200.0, None).unwrap().delta_h
            };
            let before = eval(&p);
            p[which] *= factor;
            if which == 3 { p[3] = p[3].min(1.0); }
            prop_assert!(eval(&p) < before);
        }

        #[test]
        fn strain_increases_with_free_pulse_count(
            loss in 1e-6f64..0.1,
            np in 1.0f64..1e3,
            extra in 1.0f64..100.0,
        ) {
            let noise = NoiseBudget::shot_noise(loss, 1.0, 1.0, 1e6).unwrap();
            let a = strain_uncertainty(&noise, 9e6, 50.0, 10.0, 2.0, np, None).unwrap().delta_h;
            let b = strain_uncertainty(&noise, 9e6, 50.0, 10.0, 2.0, np + extra, None).unwrap().delta_h;
            prop_assert!(b > a);
        }
    }
}
