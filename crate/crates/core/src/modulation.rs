//! Distance to the soliton manifold, orthogonal decomposition and modulation speed.
//!
//! Both fits reduce to a scalar problem in the center `x0` of a translated correlation
//! `c(x0) = (1/L) Re sum_k a_k e^{i xi_k x0}`. The correlation is evaluated on the whole grid
//! with one inverse FFT to locate a global bracket, then refined off-grid by direct summation.
use crate::imethod::{apply_i, apply_i_spectral, MultiplierProfile};
use crate::soliton::{half_width, psi0, psi0_unchecked, SolitonParams};
use crate::spectral::{
    dealiased_product, derivative, inner, inverse_in_place, sobolev_norm, spectral_derivative,
    spectral_sobolev_norm,
};
use crate::{Complex, Error, GridSpec, RealField, Result};

/// Sub-intervals used to search the orthogonality bracket for a sign change.
const BRACKET_SAMPLES: usize = 64;
const MAX_ITERATIONS: usize = 200;
const POLISH_STEPS: usize = 3;
/// Minimum of `|<u_x, G>| / |<psi_x, G>|` accepted by [`xdot0_estimate`].
pub const DENOMINATOR_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitKind {
    /// Minimiser of the H^s distance over translations.
    Translation { s: f64 },
    /// Root of the `I`-weighted orthogonality condition.
    Orthogonal(MultiplierProfile),
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted center in `[0, length)`.
    pub center: f64,
    /// `||w||_{H^s}` for translation fits, `||I w||_{H^1}` for orthogonal fits.
    pub distance: f64,
    /// `w = u - psi0(. - center)`
    pub residual: RealField,
    /// `<w, I(psi^2)_x>` for orthogonal fits; the derivative of the squared distance otherwise.
    pub orthogonality_residual: f64,
    /// False when `u` is too far from the manifold for the minimum to be meaningful.
    pub clear_minimum: bool,
    pub kind: FitKind,
}

/// `x -> (1/L) Re sum_k a_k e^{i xi_k x}` with the Nyquist mode excluded.
struct Correlation {
    grid: GridSpec,
    a: Vec<Complex>,
}

impl Correlation {
    fn new(grid: GridSpec, mut a: Vec<Complex>) -> Self {
        a[grid.nyquist_index()] = Complex::new(0.0, 0.0);
        Self { grid, a }
    }

    fn on_grid(&self) -> Vec<f64> {
        let mut buffer = self.a.clone();
        inverse_in_place(&mut buffer);
        let scale = 1.0 / self.grid.length();
        buffer.iter().map(|z| z.re * scale).collect()
    }

    /// `order`-th derivative at `x`.
    fn eval(&self, x: f64, order: u32) -> f64 {
        let mut acc = crate::sum::Compensated::default();
        for (j, a) in self.a.iter().enumerate() {
            let xi = self.grid.wavenumber(j);
            let factor = Complex::new(0.0, xi).powu(order) * Complex::from_polar(1.0, xi * x);
            acc.add((a * factor).re);
        }
        acc.value() / self.grid.length()
    }
}

/// Root of `f` in `[lo, hi]` given `f(lo) * f(hi) <= 0`, by Newton steps that fall back to
/// bisection whenever they leave the bracket.
fn safeguarded_newton(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let (f_lo, _) = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    let lo_positive = f_lo > 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let (value, slope) = f(x);
        if value == 0.0 {
            return x;
        }
        if (value > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - value / slope;
        let next = if slope != 0.0 && newton > lo.min(hi) && newton < lo.max(hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Maximiser of a smooth unimodal `f` on `[lo, hi]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-13 * hi.abs().max(1.0) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

fn unit_soliton(grid: GridSpec) -> Result<RealField> {
    psi0(grid, SolitonParams::unit(0.0))
}

/// Fits `u` by a unit-speed translate of the soliton, minimising the H^s distance globally
/// over the period.
pub fn fit_translation(u: &RealField, s: f64) -> Result<FitResult> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidInput(format!("Sobolev index must be non-negative, got {s}")));
    }
    let grid = u.grid();
    let psi = unit_soliton(grid)?.to_spectral();
    let u_hat = u.to_spectral();
    let a = u_hat
        .coefficients()
        .iter()
        .zip(psi.coefficients())
        .enumerate()
        .map(|(j, (uc, pc))| (1.0 + grid.wavenumber(j).abs()).powf(2.0 * s) * uc * pc.conj())
        .collect();
    let corr = Correlation::new(grid, a);
    let values = corr.on_grid();
    let best = values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(j, _)| j)
        .unwrap_or(0);
    let h = grid.spacing();
    let (lo, hi) = (grid.x(best) - h, grid.x(best) + h);
    let (d_lo, d_hi) = (corr.eval(lo, 1), corr.eval(hi, 1));
    let center = if d_lo >= 0.0 && d_hi <= 0.0 && d_lo != d_hi {
        safeguarded_newton(|x| (corr.eval(x, 1), corr.eval(x, 2)), lo, hi)
    } else {
        golden_section_max(|x| corr.eval(x, 0), lo, hi)
    }
    .rem_euclid(grid.length());

    let residual = u - &psi0_unchecked(grid, SolitonParams::unit(center));
    let distance = sobolev_norm(&residual, s);
    let threshold = 0.5 * spectral_sobolev_norm(&psi, s);
    Ok(FitResult {
        center,
        distance,
        orthogonality_residual: -2.0 * corr.eval(center, 1),
        residual,
        clear_minimum: distance <= threshold,
        kind: FitKind::Translation { s },
    })
}

/// `I (psi^2)_x` for the unit soliton centred at `center`; the identity profile gives the
/// unweighted direction `(psi^2)_x`.
pub fn pairing_direction(grid: GridSpec, center: f64, profile: &MultiplierProfile) -> Result<RealField> {
    let psi = psi0(grid, SolitonParams::unit(center))?;
    let square = dealiased_product(&psi, &psi).to_spectral();
    Ok(apply_i_spectral(&spectral_derivative(&square, 1), profile).to_physical())
}

/// Decomposes `u = psi0(. - x0) + w` with `<w, I(psi^2)_x> = 0`, starting from the H¹ fit and
/// searching one soliton half-width on either side.
pub fn fit_orthogonal(u: &RealField, profile: &MultiplierProfile) -> Result<FitResult> {
    let grid = u.grid();
    let start = fit_translation(u, 1.0)?;
    let psi = unit_soliton(grid)?.to_spectral();
    let direction = pairing_direction(grid, 0.0, profile)?.to_spectral();
    let a = u
        .to_spectral()
        .coefficients()
        .iter()
        .zip(direction.coefficients())
        .map(|(uc, gc)| uc * gc.conj())
        .collect();
    let corr = Correlation::new(grid, a);
    let offset = Correlation::new(
        grid,
        psi.coefficients().iter().zip(direction.coefficients()).map(|(p, g)| p * g.conj()).collect(),
    )
    .eval(0.0, 0);
    let g = |x: f64| corr.eval(x, 0) - offset;

    let width = half_width(1.0);
    let root = bracket_root(&g, start.center, width).ok_or_else(|| {
        let best_residual = (0..=2 * BRACKET_SAMPLES)
            .map(|i| start.center - width + width * i as f64 / BRACKET_SAMPLES as f64)
            .map(|x| g(x).abs())
            .fold(f64::INFINITY, f64::min);
        Error::RootNotFound { center: start.center, best_residual }
    })?;
    let mut center = safeguarded_newton(|x| (g(x), corr.eval(x, 1)), root.0, root.1).rem_euclid(grid.length());

    // polish against the sampled pairing that is reported
    let physical = |x: f64| -> Result<(RealField, f64)> {
        let residual = u - &psi0_unchecked(grid, SolitonParams::unit(x));
        let pairing = inner(&residual, &pairing_direction(grid, x, profile)?);
        Ok((residual, pairing))
    };
    let (mut residual, mut pairing) = physical(center)?;
    for _ in 0..POLISH_STEPS {
        let slope = corr.eval(center, 1);
        if slope == 0.0 || pairing == 0.0 {
            break;
        }
        let candidate = (center - pairing / slope).rem_euclid(grid.length());
        let (r, p) = physical(candidate)?;
        if p.abs() >= pairing.abs() {
            break;
        }
        (center, residual, pairing) = (candidate, r, p);
    }
    let distance = sobolev_norm(&apply_i(&residual, profile), 1.0);
    Ok(FitResult {
        center,
        distance,
        residual,
        orthogonality_residual: pairing,
        clear_minimum: start.clear_minimum,
        kind: FitKind::Orthogonal(*profile),
    })
}

/// Sub-bracket of `[center - width, center + width]` containing a sign change of `g`,
/// preferring the one closest to `center`.
fn bracket_root(g: &impl Fn(f64) -> f64, center: f64, width: f64) -> Option<(f64, f64)> {
    let step = width / BRACKET_SAMPLES as f64;
    if g(center) == 0.0 {
        return Some((center, center));
    }
    for i in 0..BRACKET_SAMPLES {
        for sign in [1.0, -1.0] {
            let a = center + sign * step * i as f64;
            let b = center + sign * step * (i + 1) as f64;
            if g(a) * g(b) <= 0.0 {
                return Some((a.min(b), a.max(b)));
            }
        }
    }
    None
}

/// Modulation speed relative to the unit soliton frame,
/// `<w_xxx + (w (w + 2 psi))_x - w_x, G> / <u_x, G>` with `G = I(psi^2)_x` centred at the fit.
pub fn xdot0_estimate(u: &RealField, fit: &FitResult, profile: &MultiplierProfile) -> Result<f64> {
    let grid = u.grid();
    if fit.residual.grid() != grid {
        return Err(Error::InvalidInput("fit and field live on different grids".into()));
    }
    let psi = psi0(grid, SolitonParams::unit(fit.center))?;
    let direction = pairing_direction(grid, fit.center, profile)?;
    let w = &fit.residual;
    let w_xxx = derivative(w, 3)?;
    let w_x = derivative(w, 1)?;
    let coupling = dealiased_product(w, &w.axpy(2.0, &psi));
    let coupling_x = derivative(&coupling, 1)?;
    let numerator = inner(&(&(&w_xxx + &coupling_x) - &w_x), &direction);
    let denominator = inner(&derivative(u, 1)?, &direction);
    let reference = inner(&derivative(&psi, 1)?, &direction);
    let limit = DENOMINATOR_FLOOR * reference.abs();
    if denominator.is_nan() || denominator.abs() < limit {
        return Err(Error::SmallDenominator { value: denominator.abs(), limit });
    }
    Ok(numerator / denominator)
}
