//! The explicit KdV ground state `psi(x) = (3/2) C sech^2(sqrt(C) x / 2)` and its orbit.
use crate::spectral::{dealiased_product, inner, spectral_derivative};
use crate::{Complex, Error, GridSpec, RealField, Result};

/// Largest admissible ratio between the soliton's value at the half-period and its peak.
pub const BOUNDARY_RATIO_LIMIT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub speed: f64,
    pub center: f64,
}

impl SolitonParams {
    pub fn new(speed: f64, center: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::InvalidInput(format!("soliton speed must be positive, got {speed}")));
        }
        if !center.is_finite() {
            return Err(Error::InvalidInput(format!("soliton center must be finite, got {center}")));
        }
        Ok(Self { speed, center })
    }

    /// Unit-speed soliton at `center`; the manifold of the stability experiments.
    pub fn unit(center: f64) -> Self {
        Self { speed: 1.0, center }
    }
}

impl Default for SolitonParams {
    fn default() -> Self {
        Self::unit(0.0)
    }
}

/// Closed-form profile at signed distance `y` from the center.
pub fn profile(y: f64, speed: f64) -> f64 {
    let s = 1.0 / (0.5 * speed.sqrt() * y).cosh();
    1.5 * speed * s * s
}

/// Half width at half maximum of the profile.
pub fn half_width(speed: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2.acosh() / speed.sqrt()
}

/// Signed minimal-image displacement `x - center` on a periodic domain.
pub(crate) fn periodic_offset(x: f64, center: f64, length: f64) -> f64 {
    let d = (x - center).rem_euclid(length);
    if d >= 0.5 * length {
        d - length
    } else {
        d
    }
}

pub(crate) fn check_domain(grid: &GridSpec, speed: f64) -> Result<()> {
    let ratio = profile(0.5 * grid.length(), speed) / profile(0.0, speed);
    if ratio >= BOUNDARY_RATIO_LIMIT {
        return Err(Error::InsufficientDomain { ratio, limit: BOUNDARY_RATIO_LIMIT });
    }
    Ok(())
}

/// Samples `psi(x - center)` using the periodic minimal image.
pub fn psi0(grid: GridSpec, params: SolitonParams) -> Result<RealField> {
    check_domain(&grid, params.speed)?;
    Ok(psi0_unchecked(grid, params))
}

pub(crate) fn psi0_unchecked(grid: GridSpec, params: SolitonParams) -> RealField {
    let samples = (0..grid.points())
        .map(|j| profile(periodic_offset(grid.x(j), params.center, grid.length()), params.speed))
        .collect();
    RealField::from_raw(grid, samples)
}

/// L² norm of `psi_xx - C psi + psi^2`.
pub fn ode_residual(psi: &RealField, speed: f64) -> f64 {
    let psi_xx = spectral_derivative(&psi.to_spectral(), 2).to_physical();
    let square = dealiased_product(psi, psi);
    let residual = RealField::from_raw(
        psi.grid(),
        psi.samples()
            .iter()
            .zip(psi_xx.samples())
            .zip(square.samples())
            .map(|((p, pxx), p2)| pxx - speed * p + p2)
            .collect(),
    );
    inner(&residual, &residual).sqrt()
}

/// `Q(x, t) = psi(x - center - C t)`, translated by a spectral phase.
pub fn orbit(params: SolitonParams, t: f64, grid: GridSpec) -> Result<RealField> {
    let base = psi0(grid, params)?;
    let shift = params.speed * t;
    if shift == 0.0 {
        return Ok(base);
    }
    Ok(base
        .to_spectral()
        .multiply(|xi| Complex::from_polar(1.0, -xi * shift))
        .to_physical())
}
