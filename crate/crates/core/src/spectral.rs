//! Periodic grid, discrete Fourier transforms and spectral calculus.
//!
//! Conventions used throughout the crate:
//!
//! - Grid points are `x_j = j * spacing` for `j = 0..points`, covering `[0, length)`.
//! - Coefficients are stored in FFT order: index `j` carries mode `k = j` for
//!   `j < points / 2` and `k = j - points` otherwise, so the Nyquist index `points / 2`
//!   carries `k = -points / 2`. The wavenumber of mode `k` is `xi = 2 pi k / length`.
//! - `to_spectral` approximates the continuous transform `\hat u(xi) = \int e^{-i x xi} u dx`:
//!   `\hat u_k = spacing * sum_j u_j e^{-i xi_k x_j}`. The inverse is
//!   `u_j = (1 / length) * sum_k \hat u_k e^{i xi_k x_j}`, so Parseval reads
//!   `\int |u|^2 dx = (1 / length) * sum_k |\hat u_k|^2`.
//! - Every derivative or multiplier action zeroes the Nyquist coefficient.
use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::sum::compensated_sum;
use crate::{Complex, Error, Result};

/// Periodic truncation of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    length: f64,
    points: usize,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 64;

    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if points < Self::MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= {}, got {points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { length, points })
    }

    /// Default experiment resolution: length 80, 1024 points.
    pub fn reference() -> Self {
        Self { length: 80.0, points: 1024 }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Signed integer mode stored at FFT index `index`.
    pub fn mode(&self, index: usize) -> i64 {
        let n = self.points as i64;
        let j = index as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT index carrying signed mode `k`, if it is representable.
    pub fn index_of_mode(&self, k: i64) -> Option<usize> {
        let n = self.points as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + n) as usize })
    }

    pub fn wavenumber(&self, index: usize) -> f64 {
        2.0 * PI * self.mode(index) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.wavenumber(j)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    /// Largest |k| kept by the two-thirds rule.
    pub fn dealias_limit(&self) -> i64 {
        (self.points / 3) as i64
    }

    /// Modes with |k| above this count as spectral tail.
    pub fn tail_limit(&self) -> i64 {
        (self.points / 4) as i64
    }

    pub fn max_dealiased_wavenumber(&self) -> f64 {
        2.0 * PI * self.dealias_limit() as f64 / self.length
    }

    fn check_same(&self, other: &GridSpec) {
        assert!(self == other, "fields live on different grids: {self:?} vs {other:?}");
    }
}

/// Physical-space samples of a real periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.points(),
                samples.len()
            )));
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite sample {} at index {j}",
                samples[j]
            )));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..grid.points()).map(|j| f(grid.x(j))).collect();
        Self::new(grid, samples)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, samples: vec![0.0; grid.points()] }
    }

    /// Caller guarantees length; finiteness is checked by the consumers that care.
    pub(crate) fn from_raw(grid: GridSpec, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.points());
        Self { grid, samples }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.grid, self.samples.iter().map(|v| v * factor).collect())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &RealField) -> Self {
        self.grid.check_same(&other.grid);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + factor * b)
            .collect();
        Self::from_raw(self.grid, samples)
    }

    pub fn to_spectral(&self) -> SpectralField {
        to_spectral(self)
    }
}

impl Add for &RealField {
    type Output = RealField;

    fn add(self, rhs: &RealField) -> RealField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &RealField {
    type Output = RealField;

    fn sub(self, rhs: &RealField) -> RealField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &RealField {
    type Output = RealField;

    fn mul(self, rhs: f64) -> RealField {
        self.scaled(rhs)
    }
}

/// Fourier coefficients in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coefficients: Vec<Complex>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coefficients: Vec<Complex>) -> Result<Self> {
        if coefficients.len() != grid.points() {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                grid.points(),
                coefficients.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub(crate) fn from_raw(grid: GridSpec, coefficients: Vec<Complex>) -> Self {
        debug_assert_eq!(coefficients.len(), grid.points());
        Self { grid, coefficients }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex> {
        self.coefficients
    }

    /// Coefficient of signed mode `k`; zero when the mode is not representable.
    pub fn mode(&self, k: i64) -> Complex {
        self.grid
            .index_of_mode(k)
            .map_or(Complex::new(0.0, 0.0), |j| self.coefficients[j])
    }

    /// Coefficientwise multiplication by `symbol(xi)`, Nyquist zeroed.
    pub fn multiply(&self, symbol: impl Fn(f64) -> Complex) -> SpectralField {
        let nyquist = self.grid.nyquist_index();
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j == nyquist {
                    Complex::new(0.0, 0.0)
                } else {
                    c * symbol(self.grid.wavenumber(j))
                }
            })
            .collect();
        SpectralField::from_raw(self.grid, coefficients)
    }

    pub fn to_physical(&self) -> RealField {
        self.to_physical_with_residue().0
    }

    /// Inverse transform together with the largest discarded imaginary part,
    /// relative to the largest real sample (absolute when the field vanishes).
    pub fn to_physical_with_residue(&self) -> (RealField, f64) {
        let mut buffer = self.coefficients.clone();
        inverse_in_place(&mut buffer);
        let scale = 1.0 / self.grid.length();
        let mut max_re = 0.0_f64;
        let mut max_im = 0.0_f64;
        let samples = buffer
            .iter()
            .map(|z| {
                max_re = max_re.max((z.re * scale).abs());
                max_im = max_im.max((z.im * scale).abs());
                z.re * scale
            })
            .collect();
        let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
        (RealField::from_raw(self.grid, samples), residue)
    }

    /// `(1 / length) * sum_k weight(xi_k) |c_k|^2`
    pub(crate) fn weighted_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let scale = 1.0 / self.grid.length();
        compensated_sum(
            self.coefficients
                .iter()
                .enumerate()
                .map(|(j, c)| weight(self.grid.wavenumber(j)) * c.norm_sqr()),
        ) * scale
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized forward DFT.
pub(crate) fn forward_in_place(buffer: &mut [Complex]) {
    plans(buffer.len()).0.process(buffer);
}

/// Unnormalized inverse DFT.
pub(crate) fn inverse_in_place(buffer: &mut [Complex]) {
    plans(buffer.len()).1.process(buffer);
}

pub fn to_spectral(u: &RealField) -> SpectralField {
    let h = u.grid.spacing();
    let mut buffer: Vec<Complex> = u.samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward_in_place(&mut buffer);
    for c in &mut buffer {
        *c *= h;
    }
    SpectralField::from_raw(u.grid, buffer)
}

pub fn to_physical(v: &SpectralField) -> RealField {
    v.to_physical()
}

/// `(i xi)^order` applied spectrally; `order` must be 1, 2 or 3.
pub fn derivative(u: &RealField, order: u32) -> Result<RealField> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidInput(format!("derivative order must be 1, 2 or 3, got {order}")));
    }
    Ok(spectral_derivative(&u.to_spectral(), order).to_physical())
}

pub(crate) fn spectral_derivative(v: &SpectralField, order: u32) -> SpectralField {
    v.multiply(|xi| Complex::new(0.0, xi).powu(order))
}

/// Discrete H^s norm with weight `(1 + |xi|)^s`.
pub fn sobolev_norm(u: &RealField, s: f64) -> f64 {
    spectral_sobolev_norm(&u.to_spectral(), s)
}

pub(crate) fn spectral_sobolev_norm(v: &SpectralField, s: f64) -> f64 {
    if s == 0.0 {
        return v.weighted_energy(|_| 1.0).sqrt();
    }
    v.weighted_energy(|xi| (1.0 + xi.abs()).powf(2.0 * s)).sqrt()
}

/// Two-thirds rule: zero every coefficient with |k| > points / 3.
pub fn dealias(v: &SpectralField) -> SpectralField {
    let limit = v.grid.dealias_limit();
    let coefficients = v
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, &c)| if v.grid.mode(j).abs() > limit { Complex::new(0.0, 0.0) } else { c })
        .collect();
    SpectralField::from_raw(v.grid, coefficients)
}

pub(crate) fn dealias_in_place(grid: &GridSpec, coefficients: &mut [Complex]) {
    let limit = grid.dealias_limit() as usize;
    let n = grid.points();
    // indices limit+1 ..= n-limit-1 carry |k| > limit
    for c in &mut coefficients[limit + 1..n - limit] {
        *c = Complex::new(0.0, 0.0);
    }
}

/// Fraction of Parseval energy carried by modes with |k| > points / 4. Zero for the zero field.
pub fn tail_fraction(u: &RealField) -> f64 {
    spectral_tail_fraction(&u.to_spectral())
}

pub(crate) fn spectral_tail_fraction(v: &SpectralField) -> f64 {
    coefficient_tail_fraction(&v.grid, &v.coefficients)
}

pub(crate) fn coefficient_tail_fraction(grid: &GridSpec, coefficients: &[Complex]) -> f64 {
    let limit = grid.tail_limit();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, c) in coefficients.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if grid.mode(j).abs() > limit {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// `u(x - shift)`, realised as a phase rotation so `shift` need not be a grid multiple.
pub fn translate(u: &RealField, shift: f64) -> RealField {
    u.to_spectral()
        .multiply(|xi| Complex::from_polar(1.0, -xi * shift))
        .to_physical()
}

/// `\int u dx` by the rectangle rule (exact for trigonometric polynomials).
pub fn integrate(u: &RealField) -> f64 {
    compensated_sum(u.samples.iter().copied()) * u.grid.spacing()
}

/// `\int a b dx`
pub fn inner(a: &RealField, b: &RealField) -> f64 {
    a.grid.check_same(&b.grid);
    compensated_sum(a.samples.iter().zip(&b.samples).map(|(x, y)| x * y)) * a.grid.spacing()
}

/// Pointwise product with the two-thirds rule applied to the result.
pub fn dealiased_product(a: &RealField, b: &RealField) -> RealField {
    a.grid.check_same(&b.grid);
    let product = RealField::from_raw(
        a.grid,
        a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).collect(),
    );
    dealias(&product.to_spectral()).to_physical()
}
