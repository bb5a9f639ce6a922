//! `proxverify`: run verification suites, splitting solvers, and constant
//! estimation over the convex-function catalog.
//!
//! Exit status contract: 0 for success (including failures expected from a
//! sub-critical beta), 1 for an unexpected FAIL, 2 for usage/parse problems,
//! 3 for I/O failures.

mod parse;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use proxverify_core::oracles::SampleSpec;
use proxverify_core::solvers::{
    backward_backward, compare_traces, forward_backward, BackwardProxMode, SolveTrace,
    SolverError, SolverOpts,
};
use proxverify_core::verify::{
    beta_sweep, check_bregman_bounds, equivalence_suite, estimate_constants, second_order_suite,
    SuiteConfig,
};
use proxverify_core::{CatalogFunction, Caps, Vector};

use parse::{parse_function_spec, parse_point, parse_schedule, ParsedTarget};
use report::{
    config_digest, BetaEntry, CheckEntry, EstimateBody, EstimateDocument, Header, TraceBody,
    TraceDocument, VerifyBody, VerifyDocument,
};

/// Environment variable that overrides the configured seed.
const SEED_ENV: &str = "PROXVERIFY_SEED";

#[derive(Parser)]
#[command(name = "proxverify", version, about = "Numerical verification of proximal-calculus identities")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the equivalence, Bregman, and second-order suites over a beta sweep.
    Verify(VerifyArgs),
    /// Run forward-backward / backward-backward splitting and write the trace.
    Solve(SolveArgs),
    /// Estimate empirical Lipschitz and cocoercivity constants.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct VerifyArgs {
    /// Catalog member, e.g. quadratic:d=2,diag=2;1
    function_spec: String,
    /// Single beta instead of the default sweep {0.75, 1, 1.5} x beta*.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 2001)]
    grid_points: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Fb,
    Bb,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProxModeArg {
    Identity,
    Independent,
}

#[derive(Args)]
struct SolveArgs {
    /// The (possibly nonsmooth) prox term.
    #[arg(long)]
    f1: String,
    /// The smooth term; must have a known gradient Lipschitz constant.
    #[arg(long)]
    f2: String,
    #[arg(long, value_enum, default_value_t = Algo::Fb)]
    algo: Algo,
    /// Constant step or comma-separated list, in normalized units (0, 2).
    #[arg(long)]
    gamma: String,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Starting point as semicolon-joined coordinates; defaults to zero.
    #[arg(long)]
    x0: Option<String>,
    /// How backward-backward realizes the conjugate prox.
    #[arg(long, value_enum, default_value_t = ProxModeArg::Identity)]
    prox_mode: ProxModeArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Smooth catalog member, or negid:d=N (the built-in diagnostic map).
    function_spec: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum AppError {
    Usage(String),
    Io(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Io(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> AppError {
    AppError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Estimate(args) => cmd_estimate(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn resolve_seed(flag: u64) -> Result<u64, AppError> {
    match std::env::var(SEED_ENV) {
        Ok(value) => value
            .parse::<u64>()
            .map_err(|_| AppError::Usage(format!("{SEED_ENV}='{value}' is not a u64 seed"))),
        Err(_) => Ok(flag),
    }
}

fn catalog_target(spec: &str) -> Result<CatalogFunction, AppError> {
    match parse_function_spec(spec).map_err(usage)? {
        ParsedTarget::Catalog(f) => Ok(f),
        ParsedTarget::NegatedIdentity { .. } => Err(AppError::Usage(
            "negid is an estimate-only diagnostic target".into(),
        )),
    }
}

fn write_or_print(path: &Option<PathBuf>, contents: &str) -> Result<(), AppError> {
    match path {
        Some(p) => fs::write(p, contents)
            .map_err(|e| AppError::Io(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, AppError> {
    let seed = resolve_seed(args.seed)?;
    let f = catalog_target(&args.function_spec)?;
    if let Some(beta) = args.beta {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(AppError::Usage(format!("beta must be positive, got {beta}")));
        }
    }
    let betas = match args.beta {
        Some(b) => vec![b],
        None => beta_sweep(&f),
    };
    let digest = config_digest(&[
        ("command", "verify".into()),
        ("function", args.function_spec.clone()),
        ("beta", args.beta.map_or("sweep".into(), |b| format!("{b}"))),
        ("seed", format!("{seed}")),
        ("samples", format!("{}", args.samples)),
        ("grid_points", format!("{}", args.grid_points)),
    ]);
    let cfg = SuiteConfig {
        seed,
        sample_count: args.samples,
        grid_points: args.grid_points,
        config_digest: digest.clone(),
    };

    let mut sweep = Vec::with_capacity(betas.len());
    let mut unexpected_fail = false;
    for &beta in &betas {
        let mut checks = Vec::new();
        let equivalence = equivalence_suite(&f, beta, &cfg).map_err(usage)?;
        checks.extend(
            equivalence
                .results
                .into_iter()
                .map(|r| CheckEntry::new(r, &f, beta)),
        );
        let bregman_samples = SampleSpec::new(cfg.seed_for(10), args.samples, f.box_radius());
        let (upper, lower) = check_bregman_bounds(&f, beta, &bregman_samples).map_err(usage)?;
        checks.push(CheckEntry::new(upper, &f, beta));
        checks.push(CheckEntry::new(lower, &f, beta));
        let second = second_order_suite(&f, beta, &cfg).map_err(usage)?;
        checks.extend(
            second
                .results
                .into_iter()
                .map(|r| CheckEntry::new(r, &f, beta)),
        );
        unexpected_fail |= checks.iter().any(|c| c.is_unexpected_fail());
        sweep.push(BetaEntry { beta, checks });
    }

    let document = VerifyDocument {
        header: Header::new(seed, digest),
        body: VerifyBody {
            function: f.name().to_string(),
            beta_sweep: sweep,
        },
    };
    let rendered = match args.format {
        Format::Json => document.to_json(),
        Format::Csv => document.to_csv(),
    };
    write_or_print(&args.output, &rendered)?;
    Ok(if unexpected_fail { 1 } else { 0 })
}

fn map_solver_error(e: SolverError) -> AppError {
    match e {
        SolverError::Io(io) => AppError::Io(io.to_string()),
        other => AppError::Usage(other.to_string()),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<u8, AppError> {
    let seed = resolve_seed(args.seed)?;
    let f1 = catalog_target(&args.f1)?;
    let f2 = catalog_target(&args.f2)?;
    if f1.dim() != f2.dim() {
        return Err(AppError::Usage(format!(
            "f1 has dim {} but f2 has dim {}",
            f1.dim(),
            f2.dim()
        )));
    }
    let schedule = parse_schedule(&args.gamma).map_err(usage)?;
    schedule.validate().map_err(map_solver_error)?;
    let x0 = match &args.x0 {
        Some(raw) => {
            let p = parse_point(raw).map_err(usage)?;
            if p.dim() != f1.dim() {
                return Err(AppError::Usage(format!(
                    "x0 has dim {} but the problem has dim {}",
                    p.dim(),
                    f1.dim()
                )));
            }
            p
        }
        None => Vector::zeros(f1.dim()),
    };
    let opts = SolverOpts::default();
    let digest = config_digest(&[
        ("command", "solve".into()),
        ("f1", args.f1.clone()),
        ("f2", args.f2.clone()),
        ("gamma", args.gamma.clone()),
        ("iters", format!("{}", args.iters)),
        ("seed", format!("{seed}")),
    ]);

    let prox_mode = match args.prox_mode {
        ProxModeArg::Identity => BackwardProxMode::Identity,
        ProxModeArg::Independent => BackwardProxMode::Independent,
    };
    let run_fb = || {
        forward_backward(&f1, &f2, &schedule, &x0, args.iters, &opts).map_err(map_solver_error)
    };
    let run_bb = || {
        backward_backward(&f1, &f2, &schedule, &x0, args.iters, prox_mode, &opts)
            .map_err(map_solver_error)
    };

    let write_trace = |trace: &SolveTrace, algorithm: &str, path: &Option<PathBuf>| {
        let rendered = match args.format {
            Format::Csv => {
                let mut buf = Vec::new();
                trace.write_csv(&mut buf).map_err(map_solver_error)?;
                String::from_utf8(buf).expect("csv is utf-8")
            }
            Format::Json => TraceDocument {
                header: Header::new(seed, digest.clone()),
                body: TraceBody {
                    algorithm,
                    f1: f1.name().to_string(),
                    f2: f2.name().to_string(),
                    trace,
                },
            }
            .to_json(),
        };
        write_or_print(path, &rendered)
    };

    match args.algo {
        Algo::Fb => {
            let trace = run_fb()?;
            write_trace(&trace, "fb", &args.output)?;
        }
        Algo::Bb => {
            let trace = run_bb()?;
            write_trace(&trace, "bb", &args.output)?;
        }
        Algo::Both => {
            let fb = run_fb()?;
            let bb = run_bb()?;
            let deviation = compare_traces(&fb, &bb).map_err(map_solver_error)?;
            match &args.output {
                Some(path) => {
                    write_trace(&fb, "fb", &Some(suffixed(path, "fb")))?;
                    write_trace(&bb, "bb", &Some(suffixed(path, "bb")))?;
                }
                None => {}
            }
            println!("compare_traces deviation: {deviation:e}");
        }
    }
    Ok(0)
}

/// `trace.csv` -> `trace.fb.csv`
fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = path.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(ext) => format!("{stem}.{tag}.{ext}"),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn cmd_estimate(args: EstimateArgs) -> Result<u8, AppError> {
    let seed = resolve_seed(args.seed)?;
    let digest = config_digest(&[
        ("command", "estimate".into()),
        ("function", args.function_spec.clone()),
        ("seed", format!("{seed}")),
        ("samples", format!("{}", args.samples)),
    ]);
    let (name, estimate) = match parse_function_spec(&args.function_spec).map_err(usage)? {
        ParsedTarget::Catalog(f) => {
            if !f.has(Caps::GRAD) {
                return Err(AppError::Usage(format!(
                    "{} has no gradient map to estimate constants for",
                    f.name()
                )));
            }
            let samples = SampleSpec::new(seed, args.samples, f.box_radius());
            let grad = |x: &Vector| f.gradient(x).expect("member has GRAD");
            let est = estimate_constants(grad, &samples, f.dim());
            (f.name().to_string(), est)
        }
        ParsedTarget::NegatedIdentity { dim } => {
            let samples = SampleSpec::new(seed, args.samples, 3.0);
            let est = estimate_constants(|x: &Vector| x.scale(-1.0), &samples, dim);
            (format!("negid:d={dim}"), est)
        }
    };
    let document = EstimateDocument {
        header: Header::new(seed, digest),
        body: EstimateBody {
            function: name,
            estimate,
        },
    };
    let rendered = match args.format {
        Format::Json => document.to_json(),
        Format::Csv => document.to_csv(),
    };
    write_or_print(&args.output, &rendered)?;
    Ok(0)
}
