//! Domain types, physical constants and the small set of kinematic relations
//! every other module builds on.
//!
//! All quantities are SI internally. Frequencies enter in Hz, lengths in m.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unified atomic mass unit in kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: 9.806_65,
            c: 2.997_924_58e8,
            hbar: 1.054_571_817e-34,
        }
    }
}

impl PhysicalConstants {
    pub fn new(g: f64, c: f64, hbar: f64) -> Result<Self> {
        let consts = Self { g, c, hbar };
        consts.validate()?;
        Ok(consts)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("c", self.c), ("hbar", self.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Atomic species driven on a single-photon optical transition.
///
/// The recoil velocity `ħk/m` and the loss-regime constant `η = g m/(ħk)` are
/// derived once at construction from the supplied constants.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    name: String,
    mass: f64,
    wave_number: f64,
    recoil_velocity: f64,
    eta: f64,
}

impl AtomSpecies {
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        wave_number: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain(format!("atomic mass must be positive, got {mass}")));
        }
        if !(wave_number.is_finite() && wave_number > 0.0) {
            return Err(Error::domain(format!(
                "wave number must be positive, got {wave_number}"
            )));
        }
        let recoil_velocity = consts.hbar * wave_number / mass;
        Ok(Self {
            name: name.into(),
            mass,
            wave_number,
            recoil_velocity,
            eta: consts.g / recoil_velocity,
        })
    }

    /// Species from a mass in atomic mass units and an optical wavelength in m.
    pub fn from_wavelength(
        name: impl Into<String>,
        mass_u: f64,
        wavelength: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::domain(format!(
                "optical wavelength must be positive, got {wavelength}"
            )));
        }
        Self::new(name, mass_u * ATOMIC_MASS_UNIT, 2.0 * PI / wavelength, consts)
    }

    /// Strontium-87 on the 698.4 nm clock transition (the default species).
    pub fn strontium87(consts: &PhysicalConstants) -> Self {
        Self::from_wavelength("sr87", 86.908_8, 698.4e-9, consts)
            .expect("built-in species constants are valid")
    }

    /// Look up one of the built-in species by name.
    pub fn builtin(name: &str, consts: &PhysicalConstants) -> Option<Self> {
        let (mass_u, wavelength) = match name.to_ascii_lowercase().as_str() {
            "sr87" => (86.908_8, 698.4e-9),
            "sr88" => (87.905_6, 689.4e-9),
            "yb171" => (170.936_3, 578.4e-9),
            _ => return None,
        };
        Self::from_wavelength(name.to_ascii_lowercase(), mass_u, wavelength, consts).ok()
    }

    pub const BUILTIN_NAMES: [&'static str; 3] = ["sr87", "sr88", "yb171"];

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Mass in kg.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Optical wave number k = 2π/λ in rad/m.
    pub fn wave_number(&self) -> f64 {
        self.wave_number
    }

    /// Single-photon recoil velocity ħk/m in m/s.
    pub fn recoil_velocity(&self) -> f64 {
        self.recoil_velocity
    }

    /// η = g m/(ħk) in 1/s.
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Vertical layout of the detector pair inside the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGeometry {
    pub baseline: f64,
    pub fountain_height: f64,
    pub separation: f64,
    pub rel_height: f64,
    pub tau_baseline: f64,
    pub tau_separation: f64,
}

impl DetectorGeometry {
    pub fn new(baseline: f64, fountain_height: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(baseline.is_finite() && baseline > 0.0) {
            return Err(Error::domain(format!("baseline must be positive, got {baseline}")));
        }
        if !(fountain_height > 0.0 && fountain_height < baseline) {
            return Err(Error::domain(format!(
                "fountain height must lie in (0, B) = (0, {baseline}), got {fountain_height}"
            )));
        }
        let separation = baseline - fountain_height;
        Ok(Self {
            baseline,
            fountain_height,
            separation,
            rel_height: fountain_height / baseline,
            tau_baseline: baseline / consts.c,
            tau_separation: separation / consts.c,
        })
    }

    pub fn from_rel_height(baseline: f64, rel_height: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(baseline, rel_height * baseline, consts)
    }
}

/// Multi-diamond LMT pulse scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PulseCounts {
    pub diamonds: u32,
    pub lmt_order: u32,
}

impl PulseCounts {
    /// N_P = 4QN − 2Q + 1.
    pub fn total_pulses(&self) -> u64 {
        let q = u64::from(self.diamonds);
        let n = u64::from(self.lmt_order);
        4 * q * n - 2 * q + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseScheme {
    pub diamonds: u32,
    pub lmt_order: u32,
    pub total_pulses: u64,
    pub interrogation_time: f64,
    pub total_time: f64,
}

impl PulseScheme {
    pub fn new(diamonds: u32, lmt_order: u32, interrogation_time: f64) -> Result<Self> {
        if diamonds == 0 {
            return Err(Error::domain("number of diamonds Q must be at least 1"));
        }
        if lmt_order == 0 {
            return Err(Error::domain("LMT order N must be at least 1"));
        }
        if !(interrogation_time.is_finite() && interrogation_time > 0.0) {
            return Err(Error::domain(format!(
                "interrogation time must be positive, got {interrogation_time}"
            )));
        }
        let counts = PulseCounts {
            diamonds,
            lmt_order,
        };
        Ok(Self {
            diamonds,
            lmt_order,
            total_pulses: counts.total_pulses(),
            interrogation_time,
            total_time: 2.0 * f64::from(diamonds) * interrogation_time,
        })
    }

    /// Scheme operated in resonant mode at frequency `f`.
    pub fn resonant(diamonds: u32, lmt_order: u32, frequency: f64) -> Result<Self> {
        Self::new(diamonds, lmt_order, resonant_interrogation_time(frequency)?)
    }

    pub fn counts(&self) -> PulseCounts {
        PulseCounts {
            diamonds: self.diamonds,
            lmt_order: self.lmt_order,
        }
    }
}

/// Phase read-out noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseNoise {
    /// Directly specified phase uncertainty (rad, or rad/√Hz).
    Fixed { phase_uncertainty: f64 },
    /// Shot-noise limit ΔΦ = √(2/(ν N_at C²)).
    ShotNoise {
        contrast: f64,
        repetitions: f64,
        initial_atoms: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Relative atom loss per pulse λ.
    #[serde(default)]
    pub loss_per_pulse: f64,
    #[serde(flatten)]
    pub phase: PhaseNoise,
}

impl NoiseBudget {
    pub fn fixed(phase_uncertainty: f64) -> Result<Self> {
        let budget = Self {
            loss_per_pulse: 0.0,
            phase: PhaseNoise::Fixed { phase_uncertainty },
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn shot_noise(
        loss_per_pulse: f64,
        contrast: f64,
        repetitions: f64,
        initial_atoms: f64,
    ) -> Result<Self> {
        let budget = Self {
            loss_per_pulse,
            phase: PhaseNoise::ShotNoise {
                contrast,
                repetitions,
                initial_atoms,
            },
        };
        budget.validate()?;
        Ok(budget)
    }

    /// Shot-noise budget parametrized by a source flux and an integration
    /// time, with ν·N₀ = Ṅ·T_int (a single effective repetition).
    pub fn from_flux(
        loss_per_pulse: f64,
        contrast: f64,
        atom_flux: f64,
        integration_time: f64,
    ) -> Result<Self> {
        Self::shot_noise(loss_per_pulse, contrast, 1.0, atom_flux * integration_time)
    }

    pub fn validate(&self) -> Result<()> {
        let lambda = self.loss_per_pulse;
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::domain(format!("loss per pulse must lie in [0, 1), got {lambda}")));
        }
        match self.phase {
            PhaseNoise::Fixed { phase_uncertainty } => {
                if !(phase_uncertainty.is_finite() && phase_uncertainty > 0.0) {
                    return Err(Error::domain(format!(
                        "fixed phase uncertainty must be positive, got {phase_uncertainty}"
                    )));
                }
            }
            PhaseNoise::ShotNoise {
                contrast,
                repetitions,
                initial_atoms,
            } => {
                if !(contrast > 0.0 && contrast <= 1.0) {
                    return Err(Error::domain(format!("contrast must lie in (0, 1], got {contrast}")));
                }
                if !(repetitions.is_finite() && repetitions > 0.0) {
                    return Err(Error::domain(format!(
                        "repetitions must be positive, got {repetitions}"
                    )));
                }
                if !(initial_atoms.is_finite() && initial_atoms > 0.0) {
                    return Err(Error::domain(format!(
                        "initial atom number must be positive, got {initial_atoms}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when ΔΦ depends on the number of pulses.
    pub fn is_lossy(&self) -> bool {
        matches!(self.phase, PhaseNoise::ShotNoise { .. }) && self.loss_per_pulse > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwSignal {
    pub strain: f64,
    pub frequency: f64,
}

impl GwSignal {
    pub fn new(strain: f64, frequency: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::domain(format!("frequency must be positive, got {frequency}")));
        }
        Ok(Self { strain, frequency })
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }
}

/// Interrogation time matched to a wave of frequency `f`: ωT = π, T = 1/(2f).
pub fn resonant_interrogation_time(frequency: f64) -> Result<f64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {frequency}")));
    }
    Ok(0.5 / frequency)
}

/// ξ = √(2B/(gT²)).
pub fn xi_factor(baseline: f64, interrogation_time: f64, g: f64) -> Result<f64> {
    if !(baseline > 0.0 && interrogation_time > 0.0 && g > 0.0) {
        return Err(Error::domain(format!(
            "xi requires positive B, T, g (got {baseline}, {interrogation_time}, {g})"
        )));
    }
    Ok((2.0 * baseline / (g * interrogation_time * interrogation_time)).sqrt())
}

/// ξ at resonance, √(8Bf²/g).
pub fn xi_at_frequency(baseline: f64, frequency: f64, g: f64) -> Result<f64> {
    xi_factor(baseline, resonant_interrogation_time(frequency)?, g)
}

/// Duration of a fountain of height `H`, √(8H/g).
pub fn fountain_time(height: f64, g: f64) -> Result<f64> {
    if !(height >= 0.0) {
        return Err(Error::domain(format!("fountain height must be non-negative, got {height}")));
    }
    if !(g > 0.0) {
        return Err(Error::domain(format!("g must be positive, got {g}")));
    }
    Ok((8.0 * height / g).sqrt())
}
