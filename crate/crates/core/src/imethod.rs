//! The smoothing multiplier `I_N`, modified energies `E_N`, and multilinear Λ forms.
//!
//! `I_N` acts diagonally in frequency with symbol `m(xi)`:
//!
//! - `m = 1` for `|xi| <= N`
//! - `m = (|xi| / N)^(s - 1)` for `|xi| >= 10 N`
//! - in between, with `rho = |xi| / N` and `tau = ln(rho) / ln(10)`,
//!   `m = rho^((s - 1) * (3 tau^2 - 2 tau^3))`, which is C¹ at both seams and monotone.
//!
//! The rate of `E_N(t) = L(I u(t))` along a KdV solution splits into three Λ forms.
//! For a real field each form is purely imaginary, so [`LambdaTerms`] stores
//! `Im Λ`:
//!
//! - `term_a = Im Λ3(xi1^3 m(xi1) (m(xi2) m(xi3) - m(xi2 + xi3)))`
//! - `term_b = Im Λ3(xi1 m(xi3)^2)`
//! - `term_c = Im Λ4(xi1 m(xi1 + xi2) m(xi3) m(xi4))`
//!
//! and `dE_N/dt = 2 term_a + 4 term_b - 4 term_c`.
use crate::functionals::lyapunov;
use crate::spectral::{
    dealias, dealiased_product, inner, spectral_derivative, spectral_tail_fraction,
};
use crate::sum::CompensatedComplex;
use crate::{Complex, Error, RealField, Result, SpectralField};

/// Tail fraction above which [`en_rate_terms`] refuses to evaluate.
pub const RATE_TAIL_LIMIT: f64 = 1e-6;

/// Grid size limit for the O(points³) quadrilinear brute-force sum.
pub const LAMBDA4_MAX_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierProfile {
    s: f64,
    cutoff: f64,
}

impl MultiplierProfile {
    /// `s` in `[0, 1]` (`s = 1` is the identity), `cutoff >= 1`.
    pub fn new(s: f64, cutoff: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidInput(format!("smoothing exponent s must lie in [0, 1], got {s}")));
        }
        if !(cutoff.is_finite() && cutoff >= 1.0) {
            return Err(Error::InvalidInput(format!("cutoff N must be >= 1, got {cutoff}")));
        }
        Ok(Self { s, cutoff })
    }

    pub fn identity() -> Self {
        Self { s: 1.0, cutoff: 1.0 }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn m(&self, xi: f64) -> f64 {
        let rho = xi.abs() / self.cutoff;
        if rho <= 1.0 || self.s == 1.0 {
            return 1.0;
        }
        if rho >= 10.0 {
            return rho.powf(self.s - 1.0);
        }
        let tau = rho.ln() / std::f64::consts::LN_10;
        let blend = tau * tau * (3.0 - 2.0 * tau);
        ((self.s - 1.0) * blend * rho.ln()).exp()
    }
}

pub fn m_value(xi: f64, profile: &MultiplierProfile) -> f64 {
    profile.m(xi)
}

pub fn apply_i(u: &RealField, profile: &MultiplierProfile) -> RealField {
    apply_i_spectral(&u.to_spectral(), profile).to_physical()
}

pub(crate) fn apply_i_spectral(v: &SpectralField, profile: &MultiplierProfile) -> SpectralField {
    v.multiply(|xi| Complex::new(profile.m(xi), 0.0))
}

/// `E_N = L(I u)`
pub fn energy_en(u: &RealField, profile: &MultiplierProfile) -> f64 {
    lyapunov(&apply_i(u, profile))
}

/// `E_N = L(Q + I w)`, smoothing only the residual.
pub fn energy_en_modulated(q: &RealField, w: &RealField, profile: &MultiplierProfile) -> f64 {
    lyapunov(&(q + &apply_i(w, profile)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaTerms {
    pub term_a: f64,
    pub term_b: f64,
    pub term_c: f64,
    /// `2 term_a + 4 term_b - 4 term_c`, equal to `dE_N/dt`.
    pub signed_sum: f64,
}

impl LambdaTerms {
    pub fn new(term_a: f64, term_b: f64, term_c: f64) -> Self {
        Self { term_a, term_b, term_c, signed_sum: 2.0 * term_a + 4.0 * term_b - 4.0 * term_c }
    }
}

/// Instantaneous decomposition of `dE_N/dt` from physical-space products:
///
/// - `term_a =  \int I u_xxx ((I u)^2 - I(u^2)) dx`
/// - `term_b = -(1/2) \int (u^2)_x I^2 u dx`
/// - `term_c = -(1/2) \int I(u^2)_x (I u)^2 dx`
pub fn en_rate_terms(u: &RealField, profile: &MultiplierProfile) -> Result<LambdaTerms> {
    let spectrum = u.to_spectral();
    let tail = spectral_tail_fraction(&spectrum);
    if tail > RATE_TAIL_LIMIT {
        return Err(Error::UnderResolved { tail, limit: RATE_TAIL_LIMIT });
    }
    let iu_hat = apply_i_spectral(&spectrum, profile);
    let iu = iu_hat.to_physical();
    let iu_xxx = spectral_derivative(&iu_hat, 3).to_physical();

    let square = dealias(&dealiased_product(u, u).to_spectral());
    let i_square_hat = apply_i_spectral(&square, profile);
    let i_square = i_square_hat.to_physical();
    let i_square_x = spectral_derivative(&i_square_hat, 1).to_physical();
    let square_x = spectral_derivative(&square, 1).to_physical();
    let ii_u = apply_i_spectral(&iu_hat, profile).to_physical();
    let iu_squared = dealiased_product(&iu, &iu);

    let commutator = &iu_squared - &i_square;
    let term_a = inner(&iu_xxx, &commutator);
    let term_b = -0.5 * inner(&square_x, &ii_u);
    let term_c = -0.5 * inner(&i_square_x, &iu_squared);
    Ok(LambdaTerms::new(term_a, term_b, term_c))
}

fn nonnyquist_indices(grid: &crate::GridSpec) -> impl Iterator<Item = usize> + '_ {
    let nyquist = grid.nyquist_index();
    (0..grid.points()).filter(move |&j| j != nyquist)
}

/// Orderings of the fields under all argument permutations, merged when the
/// permuted field lists coincide. Each entry carries its multiplicity.
fn distinct_orderings<'a>(fields: &[&'a SpectralField]) -> Vec<(Vec<&'a SpectralField>, usize)> {
    let n = fields.len();
    let mut perms: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        perms = perms
            .into_iter()
            .flat_map(|p| {
                (0..n)
                    .filter(|i| !p.contains(i))
                    .map(|i| {
                        let mut q = p.clone();
                        q.push(i);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    let mut out: Vec<(Vec<&SpectralField>, usize)> = Vec::new();
    for p in perms {
        let ordering: Vec<&SpectralField> = p.iter().map(|&i| fields[i]).collect();
        match out
            .iter_mut()
            .find(|(o, _)| o.iter().zip(&ordering).all(|(a, b)| a.coefficients() == b.coefficients()))
        {
            Some(entry) => entry.1 += 1,
            None => out.push((ordering, 1)),
        }
    }
    out
}

fn check_same_grid(fields: &[&RealField]) -> Result<crate::GridSpec> {
    let grid = fields[0].grid();
    if fields.iter().any(|f| f.grid() != grid) {
        return Err(Error::InvalidInput("Λ form arguments must share one grid".into()));
    }
    Ok(grid)
}

/// `Λ3(symbol; f1, f2, f3) = length^-2 * sum_{k1+k2+k3=0} [symbol] \hat f1 \hat f2 \hat f3`,
/// with `[symbol]` the average over argument permutations. Nyquist modes are excluded.
pub fn lambda3_bruteforce(
    symbol: impl Fn(f64, f64, f64) -> f64,
    f1: &RealField,
    f2: &RealField,
    f3: &RealField,
) -> Result<Complex> {
    let grid = check_same_grid(&[f1, f2, f3])?;
    let spectra = [f1.to_spectral(), f2.to_spectral(), f3.to_spectral()];
    let orderings = distinct_orderings(&[&spectra[0], &spectra[1], &spectra[2]]);
    let nyquist = grid.nyquist_index();
    let mut acc = CompensatedComplex::default();
    for (ordering, multiplicity) in &orderings {
        let (a, b, c) = (ordering[0].coefficients(), ordering[1].coefficients(), ordering[2].coefficients());
        let weight = *multiplicity as f64;
        for j1 in nonnyquist_indices(&grid) {
            for j2 in nonnyquist_indices(&grid) {
                let k3 = -grid.mode(j1) - grid.mode(j2);
                let Some(j3) = grid.index_of_mode(k3) else { continue };
                if j3 == nyquist {
                    continue;
                }
                let m = symbol(grid.wavenumber(j1), grid.wavenumber(j2), grid.wavenumber(j3));
                acc.add(a[j1] * b[j2] * c[j3] * (m * weight));
            }
        }
    }
    let scale = 1.0 / (6.0 * grid.length().powi(2));
    Ok(acc.value() * scale)
}

/// Quadrilinear analogue of [`lambda3_bruteforce`], refused above
/// [`LAMBDA4_MAX_POINTS`] grid points.
pub fn lambda4_bruteforce(
    symbol: impl Fn(f64, f64, f64, f64) -> f64,
    f1: &RealField,
    f2: &RealField,
    f3: &RealField,
    f4: &RealField,
) -> Result<Complex> {
    let grid = check_same_grid(&[f1, f2, f3, f4])?;
    if grid.points() > LAMBDA4_MAX_POINTS {
        return Err(Error::CostGuard { points: grid.points(), limit: LAMBDA4_MAX_POINTS });
    }
    let spectra = [f1.to_spectral(), f2.to_spectral(), f3.to_spectral(), f4.to_spectral()];
    let orderings = distinct_orderings(&[&spectra[0], &spectra[1], &spectra[2], &spectra[3]]);
    let nyquist = grid.nyquist_index();
    let xi = grid.wavenumbers();
    let mut acc = CompensatedComplex::default();
    for (ordering, multiplicity) in &orderings {
        let coeffs: Vec<&[Complex]> = ordering.iter().map(|f| f.coefficients()).collect();
        let weight = *multiplicity as f64;
        for j1 in nonnyquist_indices(&grid) {
            for j2 in nonnyquist_indices(&grid) {
                let ab = coeffs[0][j1] * coeffs[1][j2];
                if ab == Complex::new(0.0, 0.0) {
                    continue;
                }
                for j3 in nonnyquist_indices(&grid) {
                    let k4 = -grid.mode(j1) - grid.mode(j2) - grid.mode(j3);
                    let Some(j4) = grid.index_of_mode(k4) else { continue };
                    if j4 == nyquist {
                        continue;
                    }
                    let m = symbol(xi[j1], xi[j2], xi[j3], xi[j4]);
                    acc.add(ab * coeffs[2][j3] * coeffs[3][j4] * (m * weight));
                }
            }
        }
    }
    let scale = 1.0 / (24.0 * grid.length().powi(3));
    Ok(acc.value() * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{derivative, sobolev_norm};
    use crate::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Real field with random coefficients on 1 <= |k| <= band.
    fn band_limited(grid: GridSpec, band: i64, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex::new(0.0, 0.0); grid.points()];
        for k in 1..=band {
            let c = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                * (grid.length() / (k as f64));
            coeffs[grid.index_of_mode(k).unwrap()] = c;
            coeffs[grid.index_of_mode(-k).unwrap()] = c.conj();
        }
        SpectralField::new(grid, coeffs).unwrap().to_physical()
    }

    #[test]
    fn plateau_and_tail_are_exact() {
        for s in [0.0, 0.25, 0.5, 0.75] {
            for n in [4.0, 16.0, 64.0] {
                let p = MultiplierProfile::new(s, n).unwrap();
                for frac in [0.0, 0.3, 0.999, 1.0] {
                    assert_eq!(p.m(frac * n), 1.0);
                    assert_eq!(p.m(-frac * n), 1.0);
                }
                for rho in [10.0, 12.5, 20.0, 1000.0] {
                    assert_eq!(p.m(rho * n), rho.powf(s - 1.0));
                }
            }
        }
        let p = MultiplierProfile::new(0.5, 3.0).unwrap();
        assert!((p.m(60.0) - 0.223_606_797_749_979).abs() < 1e-15);
    }

    #[test]
    fn even_monotone_and_bounded() {
        for s in [0.0, 0.25, 0.5, 0.75] {
            for n in [4.0, 16.0, 64.0] {
                let p = MultiplierProfile::new(s, n).unwrap();
                let mut prev = 1.0;
                for i in 0..20_000 {
                    let xi = i as f64 * 0.001 * n;
                    let m = p.m(xi);
                    assert_eq!(m, p.m(-xi));
                    assert!(m > 0.0 && m <= 1.0);
                    assert!(m <= prev, "not monotone at xi = {xi}");
                    prev = m;
                }
            }
        }
    }

    #[test]
    fn continuously_differentiable_at_seams() {
        let p = MultiplierProfile::new(0.3, 5.0).unwrap();
        let h = 1e-6;
        for seam in [5.0, 50.0] {
            let left = (p.m(seam) - p.m(seam - h)) / h;
            let right = (p.m(seam + h) - p.m(seam)) / h;
            assert!((left - right).abs() < 1e-4, "seam {seam}: {left} vs {right}");
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(MultiplierProfile::new(-0.1, 4.0).is_err());
        assert!(MultiplierProfile::new(1.1, 4.0).is_err());
        assert!(MultiplierProfile::new(0.5, 0.5).is_err());
    }

    #[test]
    fn identity_cases() {
        let g = GridSpec::new(2.0 * PI, 128).unwrap();
        let u = band_limited(g, 40, 1);
        let unit_s = MultiplierProfile::new(1.0, 4.0).unwrap();
        assert!((&apply_i(&u, &unit_s) - &u).max_abs() <= 1e-12 * u.max_abs());
        let wide = MultiplierProfile::new(0.2, 64.0).unwrap();
        assert!((&apply_i(&u, &wide) - &u).max_abs() <= 1e-12 * u.max_abs());
        assert!((energy_en(&u, &MultiplierProfile::identity()) - lyapunov(&u)).abs() <= 1e-12 * lyapunov(&u).abs());
        assert_eq!(energy_en(&RealField::zeros(g), &wide), 0.0);
    }

    #[test]
    fn smoothing_gain_bound() {
        let g = GridSpec::new(2.0 * PI * 4.0, 512).unwrap();
        for (seed, (s, n)) in [(0.0, 1.0), (0.5, 2.0), (0.25, 8.0), (0.75, 3.0)].into_iter().enumerate() {
            let p = MultiplierProfile::new(s, n).unwrap();
            let u = band_limited(g, 150, seed as u64);
            let ratio = sobolev_norm(&apply_i(&u, &p), 1.0) / (n.powf(1.0 - s) * sobolev_norm(&u, s));
            assert!(ratio <= 4.0, "ratio {ratio}");
        }
    }

    #[test]
    fn commutes_with_derivative() {
        let g = GridSpec::new(2.0 * PI * 2.0, 256).unwrap();
        let u = band_limited(g, 60, 4);
        let p = MultiplierProfile::new(0.5, 3.0).unwrap();
        for order in 1..=3 {
            let a = apply_i(&derivative(&u, order).unwrap(), &p);
            let b = derivative(&apply_i(&u, &p), order).unwrap();
            assert!((&a - &b).max_abs() <= 1e-12 * a.max_abs());
        }
    }

    #[test]
    fn lambda3_matches_triple_product_for_unit_symbol() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let (a, b, c) = (band_limited(g, 8, 1), band_limited(g, 8, 2), band_limited(g, 8, 3));
        let lambda = lambda3_bruteforce(|_, _, _| 1.0, &a, &b, &c).unwrap();
        let ab = RealField::new(g, a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).collect()).unwrap();
        let direct = inner(&ab, &c);
        assert!((lambda.re - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        assert!(lambda.im.abs() <= 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn lambda3_symmetrization_identities() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let u = band_limited(g, 10, 6);
        let cube = lambda3_bruteforce(|a, _, _| a.powi(3), &u, &u, &u).unwrap();
        let product = lambda3_bruteforce(|a, b, c| a * b * c, &u, &u, &u).unwrap();
        assert!((cube - product).norm() <= 1e-10 * cube.norm().max(1.0));
        let linear = lambda3_bruteforce(|a, _, _| a, &u, &u, &u).unwrap();
        assert!(linear.norm() <= 1e-10 * cube.norm().max(1.0));
        // distinct fields exercise the permutation average
        let v = band_limited(g, 10, 7);
        let w = band_limited(g, 10, 8);
        let lin_distinct = lambda3_bruteforce(|a, _, _| a, &u, &v, &w).unwrap();
        assert!(lin_distinct.norm() <= 1e-10 * cube.norm().max(1.0));
    }

    #[test]
    fn lambda4_cost_guard() {
        let g = GridSpec::new(80.0, 1024).unwrap();
        let z = RealField::zeros(g);
        assert!(matches!(
            lambda4_bruteforce(|_, _, _, _| 1.0, &z, &z, &z, &z),
            Err(Error::CostGuard { .. })
        ));
    }

    #[test]
    fn identity_profile_rate_vanishes() {
        let g = GridSpec::new(2.0 * PI * 3.0, 256).unwrap();
        let u = band_limited(g, 30, 10);
        let terms = en_rate_terms(&u, &MultiplierProfile::identity()).unwrap();
        let scale = terms.term_b.abs() + terms.term_c.abs() + 1.0;
        assert!(terms.term_a.abs() <= 1e-10 * scale);
        assert!(terms.signed_sum.abs() <= 1e-10 * scale, "{terms:?}");
    }

    #[test]
    fn rate_terms_refuse_unresolved_fields() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let u = RealField::from_fn(g, |x| (30.0 * x).cos()).unwrap();
        assert!(matches!(
            en_rate_terms(&u, &MultiplierProfile::identity()),
            Err(Error::UnderResolved { .. })
        ));
    }
}
