//! Acceptance run: prints one line per criterion and exits non-zero if any fails.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use kdv_core::functionals::{hamiltonian, l2_squared, lyapunov, mass};
use kdv_core::imethod::{apply_i, en_rate_terms, energy_en, lambda3_bruteforce, lambda4_bruteforce, MultiplierProfile};
use kdv_core::integrator::simulate;
use kdv_core::lab::{
    envelope_check, make_perturbed_soliton, random_perturbation, read_csv, run, scan_n, scan_sigma,
    ExperimentConfig, ENVELOPE_EPSILON, ENVELOPE_MAX_CONSTANT, SCAN_N_MAX_SLOPE, SCAN_SIGMA_SLOPE_TOLERANCE,
    SCAN_SIGMA_TARGET_SLOPE,
};
use kdv_core::modulation::{fit_orthogonal, fit_translation, pairing_direction};
use kdv_core::soliton::{ode_residual, psi0, SolitonParams};
use kdv_core::spectral::{dealiased_product, derivative, inner, sobolev_norm};
use kdv_core::{Complex, GridSpec, RealField, SpectralField, StepperConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const CENTER: f64 = 40.0;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Debug>(e: E) -> String {
    format!("error: {e:?}")
}

/// Perturbation filling the resolved band, stepped at `dt = 1e-4`.
fn broadband() -> ExperimentConfig {
    let mut cfg = ExperimentConfig { dt: 1e-4, ..Default::default() };
    cfg.perturbation.band = 20.0;
    cfg
}

fn soliton_fidelity() -> Outcome {
    let clock = Instant::now();
    let g = GridSpec::reference();
    let psi = psi0(g, SolitonParams::unit(CENTER)).map_err(fail)?;
    let residual = ode_residual(&psi, 1.0);
    let mut worst = 0.0_f64;
    let mut centers = Vec::new();
    simulate(&psi, 5.0, &StepperConfig::new(1e-3).map_err(fail)?, 100, |t, u| {
        let fit = fit_translation(u, 1.0)?;
        worst = worst.max(fit.distance);
        centers.push((t, fit.center));
        Ok(())
    })
    .map_err(fail)?;
    let (t0, c0) = centers[0];
    let (t1, c1) = centers[centers.len() - 1];
    let speed = (c1 - c0) / (t1 - t0);
    let elapsed = clock.elapsed().as_secs_f64();
    check(
        residual <= 1e-8 && worst <= 1e-6 && (speed - 1.0).abs() <= 1e-3 && elapsed <= 30.0,
        format!("ode residual {residual:.2e}, max dist_H1 {worst:.2e}, speed {speed:.9}, {elapsed:.1} s"),
    )
}

fn conservation() -> Outcome {
    let cfg = ExperimentConfig::default();
    let artifact = run(&cfg, 1e-2).map_err(fail)?;
    let c = artifact.summary.conservation;
    check(
        c.within_limits(),
        format!(
            "mass {:.1e}, l2 {:.1e}, H {:.1e}, lyapunov {:.1e}",
            c.mass, c.l2_squared, c.hamiltonian, c.lyapunov
        ),
    )
}

/// Gauss-Legendre on `[-a, a]` split into panels, nodes from Newton iteration on `P_n`.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, panels: usize, order: usize) -> f64 {
    let mut nodes = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                (p0, p1) = (p1, p2);
            }
            derivative = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / derivative;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push((x, 2.0 / ((1.0 - x * x) * derivative * derivative)));
    }
    let width = 2.0 * a / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = -a + (p as f64 + 0.5) * width;
            nodes.iter().map(|&(x, w)| w * f(mid + 0.5 * width * x)).sum::<f64>() * 0.5 * width
        })
        .sum()
}

fn closed_forms() -> Outcome {
    let sech2 = |x: f64| 1.0 / (0.5 * x).cosh().powi(2);
    let psi = |x: f64| 1.5 * sech2(x);
    let psi_x = |x: f64| -1.5 * sech2(x) * (0.5 * x).tanh();
    let q = |f: &dyn Fn(f64) -> f64| gauss_legendre(f, 60.0, 240, 16);
    let oracle_mass = q(&psi);
    let oracle_l2 = q(&|x| psi(x).powi(2));
    let oracle_h = q(&|x| psi_x(x).powi(2)) - 2.0 / 3.0 * q(&|x| psi(x).powi(3));
    let oracle_lyapunov = oracle_l2 + oracle_h;
    let exact = [6.0, 6.0, -3.6, 2.4];
    let oracle = [oracle_mass, oracle_l2, oracle_h, oracle_lyapunov];
    let u = psi0(GridSpec::reference(), SolitonParams::unit(CENTER)).map_err(fail)?;
    let grid = [mass(&u), l2_squared(&u), hamiltonian(&u), lyapunov(&u)];
    let oracle_error = exact.iter().zip(&oracle).map(|(e, o)| (e - o).abs()).fold(0.0, f64::max);
    let grid_error = oracle.iter().zip(&grid).map(|(o, v)| (o - v).abs()).fold(0.0, f64::max);
    check(
        oracle_error <= 1e-10 && grid_error <= 1e-6,
        format!("oracle vs closed form {oracle_error:.1e}, grid vs oracle {grid_error:.1e}"),
    )
}

fn random_field(grid: GridSpec, band: usize, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.points();
    let mut c = vec![Complex::new(0.0, 0.0); n];
    for k in 1..=band {
        let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / k as f64;
        c[k] = z;
        c[n - k] = z.conj();
    }
    let f = SpectralField::new(grid, c).expect("hermitian coefficients").to_physical();
    f.scaled(1.0 / f.max_abs())
}

fn fd_rate(u: &RealField, profile: &MultiplierProfile) -> kdv_core::Result<f64> {
    let (h, dt) = (1e-5, 5e-6);
    let forward = StepperConfig::new(dt)?;
    let backward = forward.reversed();
    let at = |cfg: &StepperConfig, t: f64| -> kdv_core::Result<f64> {
        Ok(energy_en(&simulate(u, t, cfg, usize::MAX, |_, _| Ok(()))?.state, profile))
    };
    Ok((-at(&forward, 2.0 * h)? + 8.0 * at(&forward, h)? - 8.0 * at(&backward, h)? + at(&backward, 2.0 * h)?)
        / (12.0 * h))
}

fn rate_identity() -> Outcome {
    let mut worst_fd = 0.0_f64;
    let g = GridSpec::new(8.0 * std::f64::consts::PI, 256).map_err(fail)?;
    let profile = MultiplierProfile::new(0.5, 2.0).map_err(fail)?;
    for seed in 0..20 {
        let u = random_field(g, 40, seed);
        let fd = fd_rate(&u, &profile).map_err(fail)?;
        let ours = en_rate_terms(&u, &profile).map_err(fail)?.signed_sum;
        worst_fd = worst_fd.max((ours - fd).abs() / fd.abs());
    }
    let cfg = ExperimentConfig::default();
    let profile = MultiplierProfile::new(cfg.s, 4.0).map_err(fail)?;
    let u0 = make_perturbed_soliton(&cfg, 0.05).map_err(fail)?;
    let mut snapshots = Vec::new();
    simulate(&u0, 0.5, &StepperConfig::new(1e-3).map_err(fail)?, 250, |_, u| {
        snapshots.push(u.clone());
        Ok(())
    })
    .map_err(fail)?;
    for u in &snapshots {
        let fd = fd_rate(u, &profile).map_err(fail)?;
        let ours = en_rate_terms(u, &profile).map_err(fail)?.signed_sum;
        worst_fd = worst_fd.max((ours - fd).abs() / fd.abs());
    }

    let mut worst_term = 0.0_f64;
    for (points, band) in [(64, 10), (128, 21)] {
        let g = GridSpec::new(4.0 * std::f64::consts::PI, points).map_err(fail)?;
        let profile = MultiplierProfile::new(0.5, 1.0).map_err(fail)?;
        let m = |xi: f64| profile.m(xi);
        let u = random_field(g, band, 100 + points as u64);
        let terms = en_rate_terms(&u, &profile).map_err(fail)?;
        let a = lambda3_bruteforce(|x1, x2, x3| x1.powi(3) * m(x1) * (m(x2) * m(x3) - m(x1)), &u, &u, &u)
            .map_err(fail)?
            .im;
        let b = -0.5 * lambda3_bruteforce(|_, _, x3| x3 * m(x3).powi(2), &u, &u, &u).map_err(fail)?.im;
        let c = 0.5
            * lambda4_bruteforce(|x1, x2, x3, x4| (x1 + x2) * m(x1 + x2) * m(x3) * m(x4), &u, &u, &u, &u)
                .map_err(fail)?
                .im;
        for (ours, oracle) in [(terms.term_a, a), (terms.term_b, b), (terms.term_c, c)] {
            worst_term = worst_term.max((ours - oracle).abs() / oracle.abs());
        }
    }
    check(
        worst_fd <= 1e-4 && worst_term <= 1e-8,
        format!("signed sum vs finite difference {worst_fd:.1e}, terms vs frequency sums {worst_term:.1e}"),
    )
}

fn drift_scan_n() -> Outcome {
    let clock = Instant::now();
    let report = scan_n(&broadband()).map_err(fail)?;
    let slope = report.fit.map_or(f64::NAN, |f| f.slope);
    let elapsed = clock.elapsed().as_secs_f64();
    let drifts: Vec<String> = report.points.iter().map(|p| format!("{:.2e}", p.drift)).collect();
    check(
        slope <= SCAN_N_MAX_SLOPE && elapsed <= 300.0,
        format!("slope {slope:.2} (drifts {}), {elapsed:.1} s", drifts.join(" ")),
    )
}

fn drift_scan_sigma() -> Outcome {
    let cfg = ExperimentConfig { n_list: vec![16.0], sigma_list: vec![1e-3, 2e-3, 4e-3], ..broadband() };
    let report = scan_sigma(&cfg).map_err(fail)?;
    let slope = report.fit.map_or(f64::NAN, |f| f.slope);
    check(
        (slope - SCAN_SIGMA_TARGET_SLOPE).abs() <= SCAN_SIGMA_SLOPE_TOLERANCE,
        format!("slope {slope:.3}"),
    )
}

fn coercivity() -> Outcome {
    let cfg = ExperimentConfig::default();
    let g = cfg.grid_spec();
    let psi = psi0(g, SolitonParams::unit(CENTER)).map_err(fail)?;
    let base = lyapunov(&psi);
    let direction = derivative(&dealiased_product(&psi, &psi), 1).map_err(fail)?;
    let profile = MultiplierProfile::new(cfg.s, 8.0).map_err(fail)?;
    let (mut lo, mut hi, mut spread) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64);
    for seed in 0..50 {
        let mut spec = cfg.perturbation;
        spec.seed = seed;
        let iw = apply_i(&random_perturbation(g, &spec).map_err(fail)?, &profile);
        let iw = iw.axpy(-inner(&iw, &direction) / inner(&direction, &direction), &direction);
        let iw = iw.scaled(1.0 / sobolev_norm(&iw, 1.0));
        let ratios: Vec<f64> =
            [1e-4, 1e-3, 1e-2].iter().map(|&e| (lyapunov(&psi.axpy(e, &iw)) - base) / (e * e)).collect();
        for &r in &ratios {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        spread = spread.max((ratios[0] - ratios[1]).abs() / ratios[0].abs());
    }
    check(
        lo >= 0.05 && hi <= 20.0 && spread < 0.1,
        format!("ratio in [{lo:.4}, {hi:.4}], small-eps spread {spread:.1e}"),
    )
}

fn envelope() -> Outcome {
    let mut detail = String::new();
    let mut ok = true;
    for s in [0.0, 0.5] {
        let cfg = ExperimentConfig { s, horizon: 50.0, ..Default::default() };
        let artifact = run(&cfg, 1e-2).map_err(fail)?;
        let report = envelope_check(&artifact, ENVELOPE_EPSILON).map_err(fail)?;
        ok &= report.pass && report.constant <= ENVELOPE_MAX_CONSTANT;
        let _ = write!(detail, "s={s}: C {:.4} ", report.constant);
    }
    check(ok, detail.trim_end().to_string())
}

fn orthogonal_fit_contract() -> Outcome {
    const C: f64 = 4.0;
    let (mut worst_pairing, mut worst_ratio) = (0.0_f64, 0.0_f64);
    for s in [0.0, 0.5] {
        for seed in 0..3 {
            let mut cfg = ExperimentConfig { s, ..Default::default() };
            cfg.perturbation.seed = seed;
            let u = make_perturbed_soliton(&cfg, 1e-2).map_err(fail)?;
            let dist = fit_translation(&u, s).map_err(fail)?.distance;
            for n in [8.0, 32.0] {
                let profile = MultiplierProfile::new(s, n).map_err(fail)?;
                let fit = fit_orthogonal(&u, &profile).map_err(fail)?;
                let g = pairing_direction(u.grid(), fit.center, &profile).map_err(fail)?;
                let scale = (inner(&fit.residual, &fit.residual) * inner(&g, &g)).sqrt();
                worst_pairing = worst_pairing.max(fit.orthogonality_residual.abs() / scale);
                worst_ratio = worst_ratio.max(fit.distance / (n.powf(1.0 - s) * dist));
            }
        }
    }
    check(
        worst_pairing <= 1e-10 && worst_ratio <= C,
        format!("normalized pairing {worst_pairing:.1e}, ||Iw||_H1 / (N^(1-s) dist) <= {worst_ratio:.3} (c = {C})"),
    )
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig { horizon: 0.5, ..Default::default() };
    let mut bytes = Vec::new();
    let mut artifact = None;
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(fail)?;
        let a = run(&cfg, 1e-2).map_err(fail)?;
        let (csv_path, _) = a.write(dir.path()).map_err(fail)?;
        bytes.push(fs::read(csv_path).map_err(fail)?);
        artifact = Some(a);
    }
    let artifact = artifact.expect("two runs");
    let (n_list, records) = read_csv(bytes[0].as_slice()).map_err(fail)?;
    let identical = bytes[0] == bytes[1];
    let lossless = n_list == cfg.n_list && records == artifact.records;
    check(
        identical && lossless,
        format!("byte-identical {identical}, lossless round trip {lossless} ({} records)", records.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("soliton fidelity", soliton_fidelity),
        ("conservation", conservation),
        ("closed-form functionals", closed_forms),
        ("rate identity", rate_identity),
        ("drift vs N", drift_scan_n),
        ("drift vs sigma", drift_scan_sigma),
        ("coercivity", coercivity),
        ("distance envelope", envelope),
        ("orthogonal fit", orthogonal_fit_contract),
        ("determinism and format", determinism),
    ];
    let mut failures = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let (status, detail) = match criterion() {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failures += 1;
                ("FAIL", detail)
            }
        };
        println!("criterion {}: {status} {name}: {detail}", i + 1);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
