//! Run configuration: a TOML document with optional command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtomSpecies, NoiseBudget, PhaseNoise, PhysicalConstants};
use crate::numeric::SearchConstraints;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        Self {
            name: Some("sr87".to_owned()),
            mass_u: None,
            wavelength_m: None,
        }
    }
}

impl SpeciesConfig {
    pub fn resolve(&self, consts: &PhysicalConstants) -> Result<AtomSpecies> {
        match (self.mass_u, self.wavelength_m) {
            (Some(mass_u), Some(wavelength)) => {
                let name = self.name.clone().unwrap_or_else(|| "custom".to_owned());
                AtomSpecies::from_wavelength(name, mass_u, wavelength, consts)
                    .map_err(|e| Error::validation("species", e.to_string()))
            }
            (None, None) => {
                let name = self.name.as_deref().unwrap_or("sr87");
                AtomSpecies::builtin(name, consts).ok_or_else(|| {
                    Error::validation(
                        "species.name",
                        format!(
                            "unknown species `{name}` (known: {})",
                            AtomSpecies::BUILTIN_NAMES.join(", ")
                        ),
                    )
                })
            }
            _ => Err(Error::validation(
                "species",
                "a custom species needs both mass_u and wavelength_m",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "yes")]
    pub enforce_arm_separation: bool,
    #[serde(default = "yes")]
    pub enforce_even_n: bool,
}

fn yes() -> bool {
    true
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            enforce_arm_separation: true,
            enforce_even_n: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min_hz: f64,
    pub max_hz: f64,
    pub points: usize,
    #[serde(default = "yes")]
    pub log: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min_hz: 0.01,
            max_hz: 10.0,
            points: 200,
            log: true,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::validation("grid.points", "frequency grid is empty"));
        }
        if !(self.min_hz.is_finite() && self.min_hz > 0.0) {
            return Err(Error::validation("grid.min_hz", "must be positive"));
        }
        if !(self.max_hz.is_finite() && self.min_hz < self.max_hz) {
            return Err(Error::validation("grid.max_hz", "must exceed grid.min_hz"));
        }
        Ok(())
    }

    /// Grid points from min to max inclusive, log- or linearly spaced.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.points == 1 {
            return Ok(vec![self.min_hz]);
        }
        let last = (self.points - 1) as f64;
        let mut out: Vec<f64> = (0..self.points)
            .map(|i| {
                let x = i as f64 / last;
                if self.log {
                    self.min_hz * (self.max_hz / self.min_hz).powf(x)
                } else {
                    self.min_hz + (self.max_hz - self.min_hz) * x
                }
            })
            .collect();
        out[self.points - 1] = self.max_hz;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_noise() -> NoiseBudget {
    NoiseBudget {
        loss_per_pulse: 0.0,
        phase: PhaseNoise::Fixed {
            phase_uncertainty: 1e-5,
        },
    }
}

fn default_np_max() -> u64 {
    160_000
}

fn default_q_max() -> u32 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub baseline_m: f64,
    #[serde(default = "default_np_max")]
    pub np_max: u64,
    #[serde(default = "default_q_max")]
    pub q_max: u32,
    #[serde(default)]
    pub species: SpeciesConfig,
    #[serde(default = "default_noise")]
    pub noise: NoiseBudget,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            baseline_m: 100.0,
            np_max: default_np_max(),
            q_max: default_q_max(),
            species: SpeciesConfig::default(),
            noise: default_noise(),
            search: SearchConfig::default(),
            grid: GridConfig::default(),
            output: OutputConfig::default(),
            constants: PhysicalConstants::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::validation("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.baseline_m.is_finite() && self.baseline_m > 0.0) {
            return Err(Error::validation("baseline_m", "must be positive"));
        }
        if self.np_max < 7 {
            return Err(Error::validation("np_max", "must be at least 7"));
        }
        if self.q_max < 1 {
            return Err(Error::validation("q_max", "must be at least 1"));
        }
        self.constants
            .validate()
            .map_err(|e| Error::validation("constants", e.to_string()))?;
        self.noise
            .validate()
            .map_err(|e| Error::validation("noise", e.to_string()))?;
        self.species.resolve(&self.constants)?;
        self.grid.validate()
    }

    pub fn species(&self) -> Result<AtomSpecies> {
        self.species.resolve(&self.constants)
    }

    pub fn search_constraints(&self) -> Result<SearchConstraints> {
        self.validate()?;
        Ok(SearchConstraints {
            baseline: self.baseline_m,
            species: self.species()?,
            noise: self.noise,
            constants: self.constants,
            np_max: self.np_max,
            q_max: self.q_max,
            enforce_arm_separation: self.search.enforce_arm_separation,
            enforce_even_n: self.search.enforce_even_n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"
baseline_m = 2000.0
np_max = 1819

[species]
name = "sr87"

[noise]
mode = "shot_noise"
loss_per_pulse = 1.1e-3
contrast = 0.9
repetitions = 1.0
initial_atoms = 1e6

[grid]
min_hz = 0.3
max_hz = 10.0
points = 50
"#;

    #[test]
    fn shipped_configs_load() {
        for text in [
            include_str!("../configs/shot_noise_100m.toml"),
            include_str!("../configs/fixed_phase_2km.toml"),
        ] {
            let config = RunConfig::from_toml_str(text).unwrap();
            assert_eq!(config.grid.points, 200);
            config.search_constraints().unwrap();
        }
    }

    #[test]
    fn parses_sample() {
        let c = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.baseline_m, 2000.0);
        assert!(c.noise.is_lossy());
        assert!(c.grid.log);
        assert!(c.search.enforce_arm_separation);
        assert_eq!(c.grid.frequencies().unwrap().len(), 50);
    }

    #[test]
    fn fixed_noise_without_loss_key() {
        let c = RunConfig::from_toml_str(
            "baseline_m = 100.0\n[noise]\nmode = \"fixed\"\nphase_uncertainty = 1e-3\n",
        )
        .unwrap();
        assert_eq!(c.noise.loss_per_pulse, 0.0);
        assert!(!c.noise.is_lossy());
    }

    #[test]
    fn validation_errors_name_the_field() {
        let bad = SAMPLE.replace("points = 50", "points = 0");
        match RunConfig::from_toml_str(&bad).unwrap_err() {
            Error::Validation { field, .. } => assert_eq!(field, "grid.points"),
            e => panic!("{e:?}"),
        }
        let bad = SAMPLE.replace("name = \"sr87\"", "name = \"cs133\"");
        assert!(matches!(
            RunConfig::from_toml_str(&bad),
            Err(Error::Validation { .. })
        ));
        // syntax errors report the line
        let err = RunConfig::from_toml_str("baseline_m = = 3").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        // exactly one noise mode
        let mixed = SAMPLE.replace("initial_atoms = 1e6", "initial_atoms = 1e6\nphase_uncertainty = 1e-3");
        assert!(RunConfig::from_toml_str(&mixed).is_err());
    }

    #[test]
    fn grid_shapes() {
        let g = GridConfig {
            min_hz: 0.1,
            max_hz: 10.0,
            points: 3,
            log: true,
        };
        let f = g.frequencies().unwrap();
        assert!((f[1] - 1.0).abs() < 1e-12);
        assert_eq!(f[2], 10.0);
        let g = GridConfig { log: false, ..g };
        assert_eq!(g.frequencies().unwrap()[1], 5.05);
        let g = GridConfig { points: 1, ..g };
        assert_eq!(g.frequencies().unwrap(), vec![0.1]);
        assert!(GridConfig { min_hz: 2.0, max_hz: 1.0, ..g }.validate().is_err());
    }

    #[test]
    fn custom_species() {
        let text = "baseline_m = 10.0\n[species]\nmass_u = 86.9088\nwavelength_m = 698.4e-9\n";
        let c = RunConfig::from_toml_str(text).unwrap();
        let s = c.species().unwrap();
        let sr = AtomSpecies::strontium87(&PhysicalConstants::default());
        assert_eq!(s.name(), "custom");
        assert!((s.recoil_velocity() - sr.recoil_velocity()).abs() < 1e-15);
        let half = "baseline_m = 10.0\n[species]\nmass_u = 86.9088\n";
        assert!(RunConfig::from_toml_str(half).is_err());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            1.0f64..5000.0,
            7u64..1_000_000,
            1u32..5000,
            prop::bool::ANY,
            0.0f64..0.5,
            1e-8f64..1.0,
            (1e-3f64..1.0, 1e-3f64..1e3, 1.0f64..1e3, 2usize..1000, prop::bool::ANY),
            prop::option::of("[a-z]{1,8}\\.csv"),
        )
            .prop_map(|(b, np, q, shot, loss, x, (lo, span, n0, pts, log), path)| RunConfig {
                baseline_m: b,
                np_max: np,
                q_max: q,
                noise: if shot {
                    NoiseBudget::shot_noise(loss, x, n0, n0 * 1e3).unwrap()
                } else {
                    NoiseBudget::fixed(x).unwrap()
                },
                grid: GridConfig {
                    min_hz: lo,
                    max_hz: lo + span,
                    points: pts,
                    log,
                },
                search: SearchConfig {
                    enforce_arm_separation: shot,
                    enforce_even_n: log,
                },
                output: OutputConfig {
                    path: path.map(PathBuf::from),
                    format: if log { OutputFormat::Json } else { OutputFormat::Csv },
                },
                ..RunConfig::default()
            })
    }

    proptest! {
        #[test]
        fn toml_round_trip_is_identity(config in arb_config()) {
            let text = config.to_toml_string().unwrap();
            let back = RunConfig::from_toml_str(&text).unwrap();
            prop_assert_eq!(&back, &config);
            prop_assert_eq!(back.to_toml_string().unwrap(), text);
        }
    }
}
