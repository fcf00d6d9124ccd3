//! Conserved quantities of KdV and the Lyapunov functional.
//!
//! All cubic integrands are evaluated as `\int f * D(g h)` where `D` is the two-thirds
//! projection, which makes them exact for fields supported in |k| <= points / 3.
use serde::{Deserialize, Serialize};

use crate::spectral::{dealiased_product, derivative, inner, integrate, spectral_derivative};
use crate::RealField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub l2_squared: f64,
    pub hamiltonian: f64,
    /// `l2_squared + hamiltonian`
    pub lyapunov: f64,
}

impl FunctionalReport {
    pub fn of(u: &RealField) -> Self {
        let l2 = l2_squared(u);
        let h = hamiltonian(u);
        Self { mass: mass(u), l2_squared: l2, hamiltonian: h, lyapunov: l2 + h }
    }
}

/// `G(u) = \int u dx`
pub fn mass(u: &RealField) -> f64 {
    integrate(u)
}

pub fn l2_squared(u: &RealField) -> f64 {
    inner(u, u)
}

/// `\int u^3 dx` with the square dealiased.
pub fn cubic(u: &RealField) -> f64 {
    inner(u, &dealiased_product(u, u))
}

/// `H(u) = \int u_x^2 - (2/3) u^3 dx`
pub fn hamiltonian(u: &RealField) -> f64 {
    let ux = spectral_derivative(&u.to_spectral(), 1).to_physical();
    inner(&ux, &ux) - 2.0 / 3.0 * cubic(u)
}

/// Lyapunov functional `\int u_x^2 + u^2 - (2/3) u^3 dx`.
pub fn lyapunov(u: &RealField) -> f64 {
    l2_squared(u) + hamiltonian(u)
}

/// Rate of change of the Lyapunov functional along `f_t`:
/// `2 \int f_t (-f_xx + f - f^2) dx`.
pub fn omega(f: &RealField, f_t: &RealField) -> f64 {
    let fxx = derivative(f, 2).expect("order 2 is valid");
    let f2 = dealiased_product(f, f);
    let bracket = RealField::from_raw(
        f.grid(),
        f.samples()
            .iter()
            .zip(fxx.samples())
            .zip(f2.samples())
            .map(|((v, vxx), v2)| -vxx + v - v2)
            .collect(),
    );
    2.0 * inner(f_t, &bracket)
}
