//! Numerical laboratory for soliton stability in the Korteweg-de Vries equation
//!
//! `u_t + u_xxx + (u^2)_x = 0`
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: periodic grid, Fourier transforms, derivatives, Sobolev norms, dealiasing
//! - [`functionals`]: mass, L² norm, Hamiltonian, Lyapunov functional and its time derivative
//! - [`soliton`]: the explicit ground state and its traveling orbit
//! - [`imethod`]: the smoothing multiplier `I_N`, the modified energies `E_N` and the
//!   multilinear rate decomposition of `dE_N/dt`
//! - [`integrator`]: exponential fourth-order Runge-Kutta time stepping for KdV and for
//!   the residual equation around a moving soliton
//! - [`modulation`]: distance to the soliton manifold, orthogonal decomposition and
//!   modulation speed
//! - [`lab`]: experiment configuration, diagnostics, parameter scans and envelope checks
pub mod error;
pub mod functionals;
pub mod imethod;
pub mod integrator;
pub mod lab;
pub mod modulation;
pub mod soliton;
pub mod spectral;

mod sum;

pub use error::{Error, Result};
pub use functionals::FunctionalReport;
pub use imethod::{LambdaTerms, MultiplierProfile};
pub use integrator::{StepperConfig, Trajectory};
pub use modulation::{FitKind, FitResult};
pub use soliton::SolitonParams;
pub use spectral::{GridSpec, RealField, SpectralField};

/// Complex scalar used for all spectral coefficients.
pub type Complex = rustfft::num_complex::Complex64;
