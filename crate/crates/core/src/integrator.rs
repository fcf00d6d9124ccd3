//! Exponential time differencing (ETDRK4) for KdV and for the residual equation.
//!
//! In Fourier space `\hat u_t = i xi^3 \hat u + N(\hat u, t)`. The dispersive factor
//! `e^{i xi^3 t}` is applied exactly; only the quadratic term is subject to
//! truncation error. The φ-function coefficients are evaluated by contour averaging
//! on a unit circle around each `z = i xi^3 h`, which avoids the cancellation of the
//! closed forms near `z = 0`.
use crate::spectral::{
    coefficient_tail_fraction, dealias_in_place, dealiased_product, forward_in_place,
    inverse_in_place, spectral_derivative, tail_fraction,
};
use crate::{Complex, Error, GridSpec, RealField, Result};

/// Initial data must have at most this fraction of energy above |k| = points / 4.
pub const INITIAL_TAIL_LIMIT: f64 = 1e-8;
/// A trajectory aborts once its tail fraction exceeds this.
pub const RUNNING_TAIL_LIMIT: f64 = 1e-4;
/// Imaginary-axis stability reach of the explicit part.
pub const STABILITY_REACH: f64 = 2.8;

const CONTOUR_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub dealias_nonlinear: bool,
    /// Test hook: when false the quadratic term is dropped and only `u_t + u_xxx = 0` evolves.
    pub nonlinear: bool,
    pub direction: Direction,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { dt, dealias_nonlinear: true, nonlinear: true, direction: Direction::Forward })
    }

    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        };
        self
    }

    fn signed_dt(&self) -> f64 {
        match self.direction {
            Direction::Forward => self.dt,
            Direction::Backward => -self.dt,
        }
    }

    /// Largest stable step for a field of the given sup-norm amplitude.
    pub fn stability_bound(grid: &GridSpec, amplitude: f64) -> f64 {
        let rate = 2.0 * amplitude * grid.max_dealiased_wavenumber();
        if rate == 0.0 {
            f64::INFINITY
        } else {
            STABILITY_REACH / rate
        }
    }

    pub fn check_stability(&self, grid: &GridSpec, amplitude: f64) -> Result<()> {
        if !self.nonlinear {
            return Ok(());
        }
        let bound = Self::stability_bound(grid, amplitude);
        if self.dt > bound {
            return Err(Error::Config(format!(
                "time step {} exceeds the stability bound {bound:.3e} for amplitude {amplitude}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Outcome of a completed evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: usize,
    pub final_time: f64,
    /// Number of observer invocations.
    pub observed: usize,
    pub state: RealField,
}

/// `-u_xxx - (u^2)_x` with the square dealiased.
pub fn kdv_rhs(u: &RealField) -> RealField {
    let spectrum = u.to_spectral();
    let u_xxx = spectral_derivative(&spectrum, 3);
    let square_x = spectral_derivative(&dealiased_product(u, u).to_spectral(), 1);
    let coefficients = u_xxx
        .coefficients()
        .iter()
        .zip(square_x.coefficients())
        .map(|(a, b)| -a - b)
        .collect();
    crate::SpectralField::from_raw(u.grid(), coefficients).to_physical()
}

/// Right-hand side nonlinearity in spectral form.
trait Nonlinearity {
    fn eval(&mut self, v: &[Complex], t: f64, out: &mut [Complex]);
}

/// Shared FFT workspace for quadratic terms.
struct Quadratic {
    grid: GridSpec,
    dealias: bool,
    /// `i xi`, Nyquist zeroed
    ik: Vec<Complex>,
    work: Vec<Complex>,
}

impl Quadratic {
    fn new(grid: GridSpec, dealias: bool) -> Self {
        let nyquist = grid.nyquist_index();
        let ik = (0..grid.points())
            .map(|j| if j == nyquist { Complex::new(0.0, 0.0) } else { Complex::new(0.0, grid.wavenumber(j)) })
            .collect();
        Self { grid, dealias, ik, work: vec![Complex::new(0.0, 0.0); grid.points()] }
    }

    /// Physical samples of `v` into `work` (real parts meaningful).
    fn load_physical(&mut self, v: &[Complex]) {
        self.work.copy_from_slice(v);
        inverse_in_place(&mut self.work);
        let scale = 1.0 / self.grid.length();
        for z in &mut self.work {
            *z = Complex::new(z.re * scale, 0.0);
        }
    }

    /// Transform `work` back and write `-i xi * (work)^` into `out`.
    fn minus_derivative_into(&mut self, out: &mut [Complex]) {
        forward_in_place(&mut self.work);
        let h = self.grid.spacing();
        if self.dealias {
            dealias_in_place(&self.grid, &mut self.work);
        }
        for ((o, w), ik) in out.iter_mut().zip(&self.work).zip(&self.ik) {
            *o = -(ik * w * h);
        }
    }
}

struct KdvTerm {
    quadratic: Quadratic,
}

impl Nonlinearity for KdvTerm {
    fn eval(&mut self, v: &[Complex], _t: f64, out: &mut [Complex]) {
        self.quadratic.load_physical(v);
        for z in &mut self.quadratic.work {
            *z = Complex::new(z.re * z.re, 0.0);
        }
        self.quadratic.minus_derivative_into(out);
    }
}

/// `-(w (w + 2 Q))_x - xdot0 Q_x` for a prescribed soliton path.
struct ResidualTerm<'a> {
    quadratic: Quadratic,
    orbit: &'a dyn Fn(f64) -> RealField,
    xdot0: &'a dyn Fn(f64) -> f64,
}

impl Nonlinearity for ResidualTerm<'_> {
    fn eval(&mut self, v: &[Complex], t: f64, out: &mut [Complex]) {
        let q = (self.orbit)(t);
        self.quadratic.load_physical(v);
        for (z, qv) in self.quadratic.work.iter_mut().zip(q.samples()) {
            *z = Complex::new(z.re * (z.re + 2.0 * qv), 0.0);
        }
        self.quadratic.minus_derivative_into(out);
        let speed = (self.xdot0)(t);
        if speed != 0.0 {
            let q_hat = q.to_spectral();
            let h = self.quadratic.ik.iter();
            for ((o, qc), ik) in out.iter_mut().zip(q_hat.coefficients()).zip(h) {
                *o -= ik * qc * speed;
            }
        }
    }
}

struct ZeroTerm;

impl Nonlinearity for ZeroTerm {
    fn eval(&mut self, _v: &[Complex], _t: f64, out: &mut [Complex]) {
        out.fill(Complex::new(0.0, 0.0));
    }
}

/// Precomputed ETDRK4 coefficients for one grid and signed step.
struct Etdrk4 {
    h: f64,
    e: Vec<Complex>,
    e2: Vec<Complex>,
    q: Vec<Complex>,
    f1: Vec<Complex>,
    f2: Vec<Complex>,
    f3: Vec<Complex>,
    nv: Vec<Complex>,
    na: Vec<Complex>,
    nb: Vec<Complex>,
    nc: Vec<Complex>,
    a: Vec<Complex>,
    b: Vec<Complex>,
    c: Vec<Complex>,
}

fn contour_mean(z: Complex, f: impl Fn(Complex) -> Complex) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for j in 0..CONTOUR_POINTS {
        let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
        acc += f(z + Complex::from_polar(1.0, angle));
    }
    acc / CONTOUR_POINTS as f64
}

impl Etdrk4 {
    fn new(grid: &GridSpec, h: f64) -> Self {
        let n = grid.points();
        let nyquist = grid.nyquist_index();
        let mut e = Vec::with_capacity(n);
        let mut e2 = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        let mut f3 = Vec::with_capacity(n);
        for j in 0..n {
            let xi = if j == nyquist { 0.0 } else { grid.wavenumber(j) };
            let z = Complex::new(0.0, xi.powi(3) * h);
            e.push(z.exp());
            e2.push((z / 2.0).exp());
            q.push(contour_mean(z, |r| ((r / 2.0).exp() - 1.0) / r) * h);
            f1.push(contour_mean(z, |r| (-4.0 - r + r.exp() * (4.0 - 3.0 * r + r * r)) / r.powu(3)) * h);
            f2.push(contour_mean(z, |r| (2.0 + r + r.exp() * (r - 2.0)) / r.powu(3)) * h);
            f3.push(contour_mean(z, |r| (-4.0 - 3.0 * r - r * r + r.exp() * (4.0 - r)) / r.powu(3)) * h);
        }
        let zeros = vec![Complex::new(0.0, 0.0); n];
        Self {
            h,
            e,
            e2,
            q,
            f1,
            f2,
            f3,
            nv: zeros.clone(),
            na: zeros.clone(),
            nb: zeros.clone(),
            nc: zeros.clone(),
            a: zeros.clone(),
            b: zeros.clone(),
            c: zeros,
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn step(&mut self, v: &mut [Complex], t: f64, term: &mut dyn Nonlinearity) {
        let h = self.h;
        term.eval(v, t, &mut self.nv);
        for j in 0..v.len() {
            self.a[j] = self.e2[j] * v[j] + self.q[j] * self.nv[j];
        }
        term.eval(&self.a, t + 0.5 * h, &mut self.na);
        for j in 0..v.len() {
            self.b[j] = self.e2[j] * v[j] + self.q[j] * self.na[j];
        }
        term.eval(&self.b, t + 0.5 * h, &mut self.nb);
        for j in 0..v.len() {
            self.c[j] = self.e2[j] * self.a[j] + self.q[j] * (2.0 * self.nb[j] - self.nv[j]);
        }
        term.eval(&self.c, t + h, &mut self.nc);
        for j in 0..v.len() {
            v[j] = self.e[j] * v[j]
                + self.f1[j] * self.nv[j]
                + 2.0 * self.f2[j] * (self.na[j] + self.nb[j])
                + self.f3[j] * self.nc[j];
        }
    }
}

fn spectrum_without_nyquist(u: &RealField) -> Vec<Complex> {
    let mut v = u.to_spectral().into_coefficients();
    let nyquist = u.grid().nyquist_index();
    v[nyquist] = Complex::new(0.0, 0.0);
    v
}

fn physical(grid: GridSpec, v: &[Complex]) -> RealField {
    crate::SpectralField::from_raw(grid, v.to_vec()).to_physical()
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Config(format!("horizon must be non-negative, got {horizon}")));
    }
    Ok((horizon / dt).round() as usize)
}

fn evolve(
    grid: GridSpec,
    mut v: Vec<Complex>,
    horizon: f64,
    cfg: &StepperConfig,
    cadence: usize,
    term: &mut dyn Nonlinearity,
    observer: &mut dyn FnMut(f64, &RealField) -> Result<()>,
) -> Result<Trajectory> {
    if cadence == 0 {
        return Err(Error::Config("observer cadence must be at least 1".into()));
    }
    let steps = step_count(horizon, cfg.dt)?;
    let h = cfg.signed_dt();
    let mut scheme = Etdrk4::new(&grid, h);
    let mut observed = 0;
    observer(0.0, &physical(grid, &v))?;
    observed += 1;
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * h;
        scheme.step(&mut v, t_prev, term);
        let t = n as f64 * h;
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NumericalFailure(format!("non-finite state at t = {t}")));
        }
        let tail = coefficient_tail_fraction(&grid, &v);
        if tail > RUNNING_TAIL_LIMIT {
            return Err(Error::ResolutionFailure { time: t, tail, limit: RUNNING_TAIL_LIMIT });
        }
        if n % cadence == 0 {
            observer(t, &physical(grid, &v))?;
            observed += 1;
        }
    }
    Ok(Trajectory { steps, final_time: steps as f64 * h, observed, state: physical(grid, &v) })
}

fn check_initial_tail(u0: &RealField) -> Result<()> {
    let tail = tail_fraction(u0);
    if tail > INITIAL_TAIL_LIMIT {
        return Err(Error::UnderResolved { tail, limit: INITIAL_TAIL_LIMIT });
    }
    Ok(())
}

/// Single step of the full equation.
pub fn step(u: &RealField, cfg: &StepperConfig) -> Result<RealField> {
    simulate(u, cfg.dt, cfg, 1, |_, _| Ok(())).map(|traj| traj.state)
}

/// Evolve KdV from `u0` for `horizon` time units (rounded to whole steps).
///
/// `observer` receives `(t, u(t))` at step 0 and every `cadence` steps thereafter;
/// an error returned by the observer aborts the run.
pub fn simulate(
    u0: &RealField,
    horizon: f64,
    cfg: &StepperConfig,
    cadence: usize,
    mut observer: impl FnMut(f64, &RealField) -> Result<()>,
) -> Result<Trajectory> {
    let grid = u0.grid();
    check_initial_tail(u0)?;
    cfg.check_stability(&grid, u0.max_abs())?;
    let v = spectrum_without_nyquist(u0);
    if cfg.nonlinear {
        let mut term = KdvTerm { quadratic: Quadratic::new(grid, cfg.dealias_nonlinear) };
        evolve(grid, v, horizon, cfg, cadence, &mut term, &mut observer)
    } else {
        evolve(grid, v, horizon, cfg, cadence, &mut ZeroTerm, &mut observer)
    }
}

/// Evolve the residual `w = u - Q` of a solution about a prescribed soliton path:
/// `w_t + w_xxx + (w (w + 2 Q))_x + xdot0 Q_x = 0`.
///
/// With `cfg.nonlinear == false` the `w^2` term is dropped, leaving an equation linear in `w`.
pub fn simulate_w(
    w0: &RealField,
    orbit: impl Fn(f64) -> RealField,
    xdot0: impl Fn(f64) -> f64,
    horizon: f64,
    cfg: &StepperConfig,
    cadence: usize,
    mut observer: impl FnMut(f64, &RealField) -> Result<()>,
) -> Result<Trajectory> {
    let grid = w0.grid();
    check_initial_tail(w0)?;
    let q0 = orbit(0.0);
    if q0.grid() != grid {
        return Err(Error::InvalidInput("orbit and residual live on different grids".into()));
    }
    cfg.check_stability(&grid, w0.max_abs() + 2.0 * q0.max_abs())?;
    let v = spectrum_without_nyquist(w0);
    if cfg.nonlinear {
        let mut term = ResidualTerm {
            quadratic: Quadratic::new(grid, cfg.dealias_nonlinear),
            orbit: &orbit,
            xdot0: &xdot0,
        };
        evolve(grid, v, horizon, cfg, cadence, &mut term, &mut observer)
    } else {
        let mut term = LinearizedResidual {
            quadratic: Quadratic::new(grid, cfg.dealias_nonlinear),
            orbit: &orbit,
            xdot0: &xdot0,
        };
        evolve(grid, v, horizon, cfg, cadence, &mut term, &mut observer)
    }
}

/// Residual equation with the `w^2` term removed: `-(2 w Q)_x - xdot0 Q_x`.
struct LinearizedResidual<'a> {
    quadratic: Quadratic,
    orbit: &'a dyn Fn(f64) -> RealField,
    xdot0: &'a dyn Fn(f64) -> f64,
}

impl Nonlinearity for LinearizedResidual<'_> {
    fn eval(&mut self, v: &[Complex], t: f64, out: &mut [Complex]) {
        let q = (self.orbit)(t);
        self.quadratic.load_physical(v);
        for (z, qv) in self.quadratic.work.iter_mut().zip(q.samples()) {
            *z = Complex::new(2.0 * z.re * qv, 0.0);
        }
        self.quadratic.minus_derivative_into(out);
        let speed = (self.xdot0)(t);
        if speed != 0.0 {
            let q_hat = q.to_spectral();
            for ((o, qc), ik) in out.iter_mut().zip(q_hat.coefficients()).zip(&self.quadratic.ik) {
                *o -= ik * qc * speed;
            }
        }
    }
}
