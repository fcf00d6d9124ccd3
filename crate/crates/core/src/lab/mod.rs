//! Experiment orchestration: configuration, perturbed initial data, diagnostics, scans
//! and envelope checks.
mod config;
mod diagnostics;
mod envelope;
mod perturbation;
mod run;
mod scan;

pub use config::{ExperimentConfig, GridConfig, ModeProfile, PerturbationConfig};
pub use diagnostics::{csv_header, read_csv, write_csv, Diagnostician, DiagnosticsRecord};
pub use envelope::{envelope_check, EnvelopeReport, EnvelopeSample, ENVELOPE_MAX_CONSTANT};
pub use perturbation::{make_perturbed_soliton, random_perturbation, SIGMA_TOLERANCE};
pub use run::{
    run, ConservationDrift, EnergyDrift, RunArtifact, RunSummary, ENVELOPE_EPSILON, HAMILTONIAN_DRIFT_LIMIT,
    L2_DRIFT_LIMIT, LYAPUNOV_DRIFT_LIMIT, MASS_DRIFT_LIMIT,
};
pub use scan::{
    fit_loglog, scan_n, scan_sigma, window_drifts, ScanParameter, ScanPoint, ScanReport, SlopeFit, DRIFT_WINDOW,
    SCAN_N_MAX_SLOPE, SCAN_SIGMA_SLOPE_TOLERANCE, SCAN_SIGMA_TARGET_SLOPE,
};
