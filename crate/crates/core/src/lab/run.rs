use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::diagnostics::{write_csv, Diagnostician, DiagnosticsRecord};
use super::perturbation::make_perturbed_soliton;
use crate::integrator::simulate;
use crate::{Error, Result, StepperConfig};

/// Slack added to the time exponent of the distance envelope.
pub const ENVELOPE_EPSILON: f64 = 0.1;

pub const MASS_DRIFT_LIMIT: f64 = 1e-9;
pub const L2_DRIFT_LIMIT: f64 = 1e-9;
pub const HAMILTONIAN_DRIFT_LIMIT: f64 = 1e-6;
pub const LYAPUNOV_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDrift {
    pub n: f64,
    /// `max_t |E_N(t) - E_N(0)|`
    pub max_drift: f64,
}

/// Largest relative change of each conserved quantity over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationDrift {
    pub mass: f64,
    pub l2_squared: f64,
    pub hamiltonian: f64,
    pub lyapunov: f64,
}

impl ConservationDrift {
    pub fn from_records(records: &[DiagnosticsRecord]) -> Self {
        let drift = |f: fn(&DiagnosticsRecord) -> f64| {
            let Some(first) = records.first() else { return 0.0 };
            let base = f(first);
            let scale = if base == 0.0 { 1.0 } else { base.abs() };
            records.iter().map(|r| (f(r) - base).abs() / scale).fold(0.0, f64::max)
        };
        Self {
            mass: drift(|r| r.mass),
            l2_squared: drift(|r| r.l2_squared),
            hamiltonian: drift(|r| r.hamiltonian),
            lyapunov: drift(|r| r.lyapunov),
        }
    }

    pub fn within_limits(&self) -> bool {
        self.mass <= MASS_DRIFT_LIMIT
            && self.l2_squared <= L2_DRIFT_LIMIT
            && self.hamiltonian <= HAMILTONIAN_DRIFT_LIMIT
            && self.lyapunov <= LYAPUNOV_DRIFT_LIMIT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub sigma: f64,
    pub records: usize,
    pub final_time: f64,
    pub energy_drift: Vec<EnergyDrift>,
    pub conservation: ConservationDrift,
    pub max_dist_hs: f64,
    pub max_dist_h1: f64,
    /// `max_t dist_Hs(t) / (max(1, t)^(1 - s + 0.1) sigma)`; absent when sigma is zero.
    pub envelope_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
}

impl RunArtifact {
    pub fn config(&self) -> &ExperimentConfig {
        &self.summary.config
    }

    pub fn sigma(&self) -> f64 {
        self.summary.sigma
    }

    /// Writes `diagnostics.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("diagnostics.csv");
        let file = fs::File::create(&csv_path)?;
        write_csv(std::io::BufWriter::new(file), &self.summary.config.n_list, &self.records)?;
        let summary_path = dir.join("summary.json");
        fs::write(&summary_path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok((csv_path, summary_path))
    }
}

/// Simulates the perturbed soliton with distance `sigma` to `cfg.horizon`, recording
/// diagnostics every `cfg.cadence` steps.
pub fn run(cfg: &ExperimentConfig, sigma: f64) -> Result<RunArtifact> {
    let u0 = make_perturbed_soliton(cfg, sigma)?;
    let diagnostician = Diagnostician::new(cfg.s, &cfg.n_list)?;
    let stepper = StepperConfig::new(cfg.dt)?;
    let mut records = Vec::with_capacity(cfg.expected_records());
    let trajectory = simulate(&u0, cfg.horizon, &stepper, cfg.cadence, |t, u| {
        let record = diagnostician.record(t, u)?;
        log::debug!("t = {t:.3}: dist_Hs = {:.3e}, center = {:.6}", record.dist_hs, record.center);
        records.push(record);
        Ok(())
    })?;
    if let Some(bad) = records.iter().find(|r| !record_is_finite(r)) {
        return Err(Error::NumericalFailure(format!("non-finite diagnostics at t = {}", bad.t)));
    }
    let summary = summarize(cfg, sigma, &records, trajectory.final_time);
    Ok(RunArtifact { summary, records })
}

fn record_is_finite(r: &DiagnosticsRecord) -> bool {
    [r.t, r.mass, r.l2_squared, r.hamiltonian, r.lyapunov, r.dist_hs, r.dist_h1, r.center, r.xdot0, r.tail_fraction]
        .iter()
        .chain(&r.energies)
        .all(|v| v.is_finite())
}

fn summarize(cfg: &ExperimentConfig, sigma: f64, records: &[DiagnosticsRecord], final_time: f64) -> RunSummary {
    let energy_drift = cfg
        .n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let base = records.first().map_or(0.0, |r| r.energies[i]);
            let max_drift = records.iter().map(|r| (r.energies[i] - base).abs()).fold(0.0, f64::max);
            EnergyDrift { n, max_drift }
        })
        .collect();
    let exponent = 1.0 - cfg.s + ENVELOPE_EPSILON;
    let envelope_ratio = (sigma > 0.0).then(|| {
        records
            .iter()
            .map(|r| r.dist_hs / (r.t.max(1.0).powf(exponent) * sigma))
            .fold(0.0, f64::max)
    });
    RunSummary {
        config: cfg.clone(),
        sigma,
        records: records.len(),
        final_time,
        energy_drift,
        conservation: ConservationDrift::from_records(records),
        max_dist_hs: records.iter().map(|r| r.dist_hs).fold(0.0, f64::max),
        max_dist_h1: records.iter().map(|r| r.dist_h1).fold(0.0, f64::max),
        envelope_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> ExperimentConfig {
        ExperimentConfig { horizon: 0.05, cadence: 10, n_list: vec![4.0, 16.0], ..Default::default() }
    }

    #[test]
    fn unperturbed_run() {
        let artifact = run(&short(), 0.0).unwrap();
        assert_eq!(artifact.records.len(), short().expected_records());
        assert!(artifact.summary.max_dist_h1 <= 1e-6);
        assert!(artifact.summary.energy_drift.iter().all(|d| d.max_drift <= 1e-8));
        assert!(artifact.summary.envelope_ratio.is_none());
        assert!(artifact.records.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn artifact_files_embed_config() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = run(&short(), 1e-3).unwrap();
        let (csv_path, summary_path) = artifact.write(dir.path()).unwrap();
        let (n_list, records) =
            crate::lab::diagnostics::read_csv(fs::File::open(csv_path).unwrap()).unwrap();
        assert_eq!(n_list, short().n_list);
        assert_eq!(records, artifact.records);
        let summary: RunSummary = serde_json::from_str(&fs::read_to_string(summary_path).unwrap()).unwrap();
        assert_eq!(summary, artifact.summary);
    }

    #[test]
    fn drift_is_relative() {
        let records: Vec<DiagnosticsRecord> = [2.0, 2.0 + 2e-9, 2.0 - 4e-9]
            .iter()
            .enumerate()
            .map(|(i, &m)| DiagnosticsRecord {
                t: i as f64,
                mass: m,
                l2_squared: 0.0,
                hamiltonian: -1.0,
                lyapunov: 1.0,
                energies: vec![],
                dist_hs: 0.0,
                dist_h1: 0.0,
                center: 0.0,
                xdot0: 0.0,
                tail_fraction: 0.0,
            })
            .collect();
        let d = ConservationDrift::from_records(&records);
        assert!((d.mass - 2e-9).abs() < 1e-15);
        assert_eq!(d.l2_squared, 0.0);
    }
}
