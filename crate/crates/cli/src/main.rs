use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdv_core::imethod::MultiplierProfile;
use kdv_core::lab::{
    envelope_check, make_perturbed_soliton, run, scan_n, scan_sigma, ExperimentConfig, RunArtifact,
    ENVELOPE_EPSILON, ENVELOPE_MAX_CONSTANT,
};
use kdv_core::modulation::{fit_orthogonal, fit_translation};
use kdv_core::{Error, RealField};
use serde_json::json;

#[derive(Parser)]
#[command(name = "kdvlab", version, about = "KdV soliton stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Perturbation seed, overriding the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one perturbed soliton and write diagnostics.csv and summary.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial distance to the soliton manifold; first entry of sigma_list by default.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Drift of E_N over t in [0, 1] against N, with a log-log slope.
    ScanN {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 unless the slope meets the acceptance bound.
        #[arg(long)]
        assert: bool,
    },
    /// Drift of E_N over t in [0, 1] against sigma, with a log-log slope.
    ScanSigma {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assert: bool,
    },
    /// Compare the measured distance with the growth envelope.
    Envelope {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = ENVELOPE_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        assert: bool,
    },
    /// Fit the soliton manifold to the initial data or to a stored field.
    FitSoliton {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        /// Samples on the configured grid, whitespace or comma separated.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Simulate and report relative drifts of the conserved quantities.
    CheckConservation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        assert: bool,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

struct Context {
    cfg: ExperimentConfig,
    quiet: bool,
}

impl Context {
    fn new(common: &Common) -> Result<Self, Failure> {
        let mut cfg = match &common.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &common.out {
            cfg.output = out.clone();
        }
        if let Some(seed) = common.seed {
            cfg.perturbation.seed = seed;
        }
        cfg.validate()?;
        Ok(Self { cfg, quiet: common.quiet })
    }

    fn sigma(&self, sigma: Option<f64>) -> f64 {
        sigma.unwrap_or(self.cfg.sigma_list[0])
    }

    fn emit(&self, value: &serde_json::Value) {
        if !self.quiet {
            println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
        }
    }

    fn write_json(&self, name: &str, value: &impl serde::Serialize) -> Outcome {
        let dir = &self.cfg.output;
        fs::create_dir_all(dir).map_err(|e| Failure::Numerical(format!("{}: {e}", dir.display())))?;
        let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::Numerical(format!("{}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn run(&self, sigma: f64) -> Result<RunArtifact, Failure> {
        let artifact = run(&self.cfg, sigma)?;
        let (csv, summary) = artifact.write(&self.cfg.output)?;
        log::info!("wrote {} and {}", csv.display(), summary.display());
        Ok(artifact)
    }
}

fn asserted(assert: bool, ok: bool, message: impl FnOnce() -> String) -> Outcome {
    if assert && !ok {
        Err(Failure::Assertion(message()))
    } else {
        Ok(())
    }
}

fn simulate_cmd(common: &Common, sigma: Option<f64>) -> Outcome {
    let ctx = Context::new(common)?;
    let artifact = ctx.run(ctx.sigma(sigma))?;
    ctx.emit(&serde_json::to_value(&artifact.summary).map_err(Error::from)?);
    Ok(())
}

fn scan_cmd(common: &Common, assert: bool, by_sigma: bool) -> Outcome {
    let ctx = Context::new(common)?;
    let report = if by_sigma { scan_sigma(&ctx.cfg)? } else { scan_n(&ctx.cfg)? };
    ctx.write_json(if by_sigma { "scan_sigma.json" } else { "scan_n.json" }, &report)?;
    ctx.emit(&serde_json::to_value(&report).map_err(Error::from)?);
    asserted(assert, report.passes(), || {
        format!("slope {:?} outside the acceptance range", report.fit.map(|f| f.slope))
    })
}

fn envelope_cmd(common: &Common, sigma: Option<f64>, epsilon: f64, assert: bool) -> Outcome {
    let ctx = Context::new(common)?;
    let artifact = ctx.run(ctx.sigma(sigma))?;
    let report = envelope_check(&artifact, epsilon)?;
    ctx.write_json("envelope.json", &report)?;
    ctx.emit(&json!({
        "s": report.s,
        "sigma": report.sigma,
        "epsilon": report.epsilon,
        "constant": report.constant,
        "limit": report.limit,
        "margin": report.margin,
        "pass": report.pass,
    }));
    asserted(assert, report.pass && report.constant <= ENVELOPE_MAX_CONSTANT, || {
        format!("envelope constant {} exceeds {}", report.constant, report.limit)
    })
}

fn read_field(path: &Path, cfg: &ExperimentConfig) -> Result<RealField, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let samples = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Failure::Config(format!("{}: {t:?}: {e}", path.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    if samples.len() != cfg.grid.points {
        return Err(Failure::Config(format!(
            "{}: expected {} samples, found {}",
            path.display(),
            cfg.grid.points,
            samples.len()
        )));
    }
    Ok(RealField::new(cfg.grid_spec(), samples)?)
}

fn fit_cmd(common: &Common, sigma: Option<f64>, field: Option<&Path>) -> Outcome {
    let ctx = Context::new(common)?;
    let u = match field {
        Some(path) => read_field(path, &ctx.cfg)?,
        None => make_perturbed_soliton(&ctx.cfg, ctx.sigma(sigma))?,
    };
    let hs = fit_translation(&u, ctx.cfg.s)?;
    let h1 = fit_translation(&u, 1.0)?;
    let mut orthogonal = Vec::new();
    for &n in &ctx.cfg.n_list {
        let fit = fit_orthogonal(&u, &MultiplierProfile::new(ctx.cfg.s, n)?)?;
        orthogonal.push(json!({
            "n": n,
            "center": fit.center,
            "smoothed_h1_distance": fit.distance,
            "pairing": fit.orthogonality_residual,
        }));
    }
    ctx.emit(&json!({
        "s": ctx.cfg.s,
        "center": hs.center,
        "dist_hs": hs.distance,
        "dist_h1": h1.distance,
        "clear_minimum": hs.clear_minimum,
        "orthogonal": orthogonal,
    }));
    Ok(())
}

fn conservation_cmd(common: &Common, sigma: Option<f64>, assert: bool) -> Outcome {
    let ctx = Context::new(common)?;
    let artifact = ctx.run(ctx.sigma(sigma))?;
    let drift = artifact.summary.conservation;
    ctx.emit(&json!({ "conservation": drift, "within_limits": drift.within_limits() }));
    asserted(assert, drift.within_limits(), || format!("conservation drift exceeds limits: {drift:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Simulate { common, .. }
        | Command::ScanN { common, .. }
        | Command::ScanSigma { common, .. }
        | Command::Envelope { common, .. }
        | Command::FitSoliton { common, .. }
        | Command::CheckConservation { common, .. } => common.quiet,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "error" } else { "warn" }))
        .init();

    let outcome = match &cli.command {
        Command::Simulate { common, sigma } => simulate_cmd(common, *sigma),
        Command::ScanN { common, assert } => scan_cmd(common, *assert, false),
        Command::ScanSigma { common, assert } => scan_cmd(common, *assert, true),
        Command::Envelope { common, sigma, epsilon, assert } => envelope_cmd(common, *sigma, *epsilon, *assert),
        Command::FitSoliton { common, sigma, field } => fit_cmd(common, *sigma, field.as_deref()),
        Command::CheckConservation { common, sigma, assert } => conservation_cmd(common, *sigma, *assert),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
    }
}
