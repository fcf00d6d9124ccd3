use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::diagnostics::Diagnostician;
use super::perturbation::make_perturbed_soliton;
use crate::integrator::simulate;
use crate::{Error, RealField, Result, StepperConfig};

/// Drift measurement window `t in [0, DRIFT_WINDOW]`.
pub const DRIFT_WINDOW: f64 = 1.0;
/// `scan-n --assert` requires the fitted slope to be at most this.
pub const SCAN_N_MAX_SLOPE: f64 = -0.7;
pub const SCAN_SIGMA_TARGET_SLOPE: f64 = 2.0;
pub const SCAN_SIGMA_SLOPE_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    N,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub value: f64,
    /// `max_{t <= 1} |E_N(t) - E_N(0)|`
    pub drift: f64,
}

/// Least-squares line through `(ln value, ln drift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub parameter: ScanParameter,
    pub s: f64,
    /// The parameter held fixed: sigma for N scans, N for sigma scans.
    pub fixed: f64,
    pub points: Vec<ScanPoint>,
    /// Absent when some drift is not positive.
    pub fit: Option<SlopeFit>,
}

impl ScanReport {
    pub fn passes(&self) -> bool {
        match (self.parameter, self.fit) {
            (ScanParameter::N, Some(fit)) => fit.slope <= SCAN_N_MAX_SLOPE,
            (ScanParameter::Sigma, Some(fit)) => {
                (fit.slope - SCAN_SIGMA_TARGET_SLOPE).abs() <= SCAN_SIGMA_SLOPE_TOLERANCE
            }
            (_, None) => false,
        }
    }
}

pub fn fit_loglog(points: &[ScanPoint]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: points.len() });
    }
    if points.iter().any(|p| !(p.value > 0.0 && p.drift > 0.0)) {
        return Err(Error::InvalidInput("log-log fit needs positive values".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let xs: Vec<f64> = sorted.iter().map(|p| p.value.ln()).collect();
    let ys: Vec<f64> = sorted.iter().map(|p| p.drift.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("log-log fit needs distinct parameter values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SlopeFit { slope, intercept, residual })
}

/// `max_{t <= 1} |E_N(t) - E_N(0)|` for each profile of `diagnostician`, sampling every step.
pub fn window_drifts(u0: &RealField, dt: f64, diagnostician: &Diagnostician) -> Result<Vec<f64>> {
    let stepper = StepperConfig::new(dt)?;
    let initial = diagnostician.energies(u0);
    let mut drifts = vec![0.0_f64; initial.len()];
    simulate(u0, DRIFT_WINDOW, &stepper, 1, |_, u| {
        for ((d, e), e0) in drifts.iter_mut().zip(diagnostician.energies(u)).zip(&initial) {
            *d = d.max((e - e0).abs());
        }
        Ok(())
    })?;
    Ok(drifts)
}

fn report(parameter: ScanParameter, s: f64, fixed: f64, mut points: Vec<ScanPoint>) -> ScanReport {
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    let fit = match fit_loglog(&points) {
        Ok(fit) => Some(fit),
        Err(err) => {
            log::warn!("no slope fitted: {err}");
            None
        }
    };
    ScanReport { parameter, s, fixed, points, fit }
}

/// Drift against N at `sigma_list[0]`. One trajectory serves every N.
pub fn scan_n(cfg: &ExperimentConfig) -> Result<ScanReport> {
    cfg.validate()?;
    if cfg.n_list.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: cfg.n_list.len() });
    }
    let sigma = cfg.sigma_list[0];
    let u0 = make_perturbed_soliton(cfg, sigma)?;
    let diagnostician = Diagnostician::new(cfg.s, &cfg.n_list)?;
    let drifts = window_drifts(&u0, cfg.dt, &diagnostician)?;
    let points = cfg.n_list.iter().zip(drifts).map(|(&value, drift)| ScanPoint { value, drift }).collect();
    Ok(report(ScanParameter::N, cfg.s, sigma, points))
}

/// Drift against sigma at `n_list[0]`, one independent trajectory per sigma sharing the
/// perturbation shape.
pub fn scan_sigma(cfg: &ExperimentConfig) -> Result<ScanReport> {
    cfg.validate()?;
    if cfg.sigma_list.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: cfg.sigma_list.len() });
    }
    let n = cfg.n_list[0];
    let diagnostician = Diagnostician::new(cfg.s, &[n])?;
    let points = cfg
        .sigma_list
        .par_iter()
        .map(|&sigma| {
            let u0 = make_perturbed_soliton(cfg, sigma)?;
            let drift = window_drifts(&u0, cfg.dt, &diagnostician)?[0];
            Ok(ScanPoint { value: sigma, drift })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(ScanParameter::Sigma, cfg.s, n, points))
}
