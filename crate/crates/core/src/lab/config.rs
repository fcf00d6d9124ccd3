use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::soliton::check_domain;
use crate::{Error, GridSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.length, self.points)
    }
}

/// Spectral shape of the random perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeProfile {
    /// Equal expected amplitude on every mode in the band.
    Flat,
    /// Amplitudes decaying like `(1 + |xi|)^-exponent`.
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub profile: ModeProfile,
    /// Largest physical wavenumber `|xi|` carrying perturbation energy.
    pub band: f64,
    pub seed: u64,
}

/// Declarative description of a run or scan. Missing keys take the reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub dt: f64,
    pub horizon: f64,
    pub s: f64,
    pub n_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    pub perturbation: PerturbationConfig,
    /// Observer cadence in steps.
    pub cadence: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig { length: 80.0, points: 1024 },
            dt: 1e-3,
            horizon: 5.0,
            s: 0.5,
            n_list: vec![4.0, 8.0, 16.0, 32.0],
            sigma_list: vec![1e-2],
            perturbation: PerturbationConfig { profile: ModeProfile::Flat, band: 10.0, seed: 7 },
            cadence: 100,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.spec()?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("horizon", self.horizon)?;
        positive("perturbation.band", self.perturbation.band)?;
        if !(0.0..1.0).contains(&self.s) {
            return Err(Error::Config(format!("s must lie in [0, 1), got {}", self.s)));
        }
        if self.n_list.is_empty() || self.sigma_list.is_empty() {
            return Err(Error::Config("n_list and sigma_list must be non-empty".into()));
        }
        for &n in &self.n_list {
            if !(n.is_finite() && n >= 1.0) {
                return Err(Error::Config(format!("every N must be >= 1, got {n}")));
            }
        }
        for &sigma in &self.sigma_list {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::Config(format!("every sigma must be non-negative, got {sigma}")));
            }
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be at least 1".into()));
        }
        if let ModeProfile::Power { exponent } = self.perturbation.profile {
            if !exponent.is_finite() {
                return Err(Error::Config(format!("power exponent must be finite, got {exponent}")));
            }
        }
        let resolved = grid.wavenumber(grid.tail_limit() as usize);
        if self.perturbation.band > resolved {
            return Err(Error::Config(format!(
                "perturbation band {} exceeds the resolved wavenumber {resolved:.3}",
                self.perturbation.band
            )));
        }
        if self.perturbation.band < grid.wavenumber(1) {
            return Err(Error::Config("perturbation band contains no modes".into()));
        }
        check_domain(&grid, 1.0)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.spec().expect("validated configuration")
    }

    /// Number of observer records produced by a run.
    pub fn expected_records(&self) -> usize {
        ((self.horizon / self.dt).round() as usize) / self.cadence + 1
    }
}
