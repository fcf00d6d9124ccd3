//! Fixtures shared by the kernel benchmarks.

use kdv_core::imethod::MultiplierProfile;
use kdv_core::lab::{make_perturbed_soliton, ExperimentConfig};
use kdv_core::RealField;

/// Perturbed soliton on the reference grid at distance `sigma`.
pub fn perturbed_state(sigma: f64) -> RealField {
    make_perturbed_soliton(&ExperimentConfig::default(), sigma).expect("default configuration is valid")
}

pub fn profile(n: f64) -> MultiplierProfile {
    MultiplierProfile::new(0.5, n).expect("valid multiplier")
}
