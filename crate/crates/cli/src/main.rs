//! `degen-nlp`: solve, identify, check and batch-run degenerate NLPs.
//!
//! Exit codes: 0 converged, 1 iteration limit, 2 input error, 3 subproblem
//! or identification failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod experiment;
mod output;
mod resolve;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use degen_nlp::active_id::{interior_multiplier, procedure_id0, IdParams};
use degen_nlp::driver::{solve, Algorithm, SolveStatus, SolverConfig};
use degen_nlp::sampling::{start_rng, uniform_in_ball};
use serde::Serialize;

const EXIT_INPUT: u8 = 2;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "degen-nlp", version, about = "Stabilized SQP for degenerate inequality-constrained NLPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver from one starting point and print its trace.
    Solve(SolveArgs),
    /// Classify the active constraints at a point and estimate multipliers.
    Identify(IdentifyArgs),
    /// Compare analytic derivatives with central differences.
    Check(CheckArgs),
    /// Run a batch of solves described by a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct StartArgs {
    /// Registry name or problem file path.
    #[arg(long)]
    problem: String,
    /// Initial point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    z0: Option<String>,
    /// Initial multipliers, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    lambda0: Option<String>,
    /// Draw a perturbed start around the known solution instead.
    #[arg(long)]
    seed: Option<u64>,
    /// Perturbation radius used with --seed.
    #[arg(long, default_value_t = 1e-3)]
    radius: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Ssqpa,
    Ssqp,
    Sqp,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Ssqpa => Algorithm::Ssqpa,
            AlgorithmArg::Ssqp => Algorithm::Ssqp,
            AlgorithmArg::Sqp => Algorithm::Sqp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, value_enum, default_value = "ssqpa")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.6)]
    tau: f64,
    #[arg(long = "tau-hat", default_value_t = 0.3)]
    tau_hat: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 50)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[command(flatten)]
    start: StartArgs,
    #[arg(long, default_value_t = 0.6)]
    tau: f64,
    #[arg(long = "tau-hat", default_value_t = 0.3)]
    tau_hat: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    problem: String,
    /// Number of random points.
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Radius of the sampling ball around the known solution (or the origin).
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config.
    config: PathBuf,
    /// Directory for the per-run traces and summary.json.
    #[arg(long, default_value = "experiment-out")]
    out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

/// Input problems map to exit code 2; everything else is reported through
/// the returned code.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

type CmdResult = std::result::Result<u8, InputError>;

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIter => 1,
        SolveStatus::SubproblemFailure | SolveStatus::IdentificationFailure => EXIT_FAILURE,
    }
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let s = &args.start;
    let problem = resolve::load_problem(&s.problem)?;
    let start = resolve::start_from_flags(&problem, s.z0.as_deref(), s.lambda0.as_deref(), s.seed, s.radius)?;
    let cfg = SolverConfig {
        algorithm: args.algorithm.into(),
        sigma: args.sigma,
        tau: args.tau,
        tau_hat: args.tau_hat,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let trace = solve(&problem, &start, &cfg)?;
    let text = match args.format {
        Format::Csv => output::trace_csv(&trace),
        Format::Json => output::trace_json(&trace),
    };
    emit(args.out.as_ref(), &text)?;
    if let Some(m) = &trace.message {
        eprintln!("degen-nlp: {}: {m}", trace.status);
    }
    Ok(status_code(trace.status))
}

fn cmd_identify(args: IdentifyArgs) -> CmdResult {
    let s = &args.start;
    let problem = resolve::load_problem(&s.problem)?;
    let start = resolve::start_from_flags(&problem, s.z0.as_deref(), s.lambda0.as_deref(), s.seed, s.radius)?;
    let params = IdParams::new(args.tau, args.tau_hat)?;
    let result = procedure_id0(&problem, &start, params)
        .and_then(|id| interior_multiplier(&problem, &start, &id.strongly, args.tau).map(|im| (id, im)));
    match result {
        Ok((id, im)) => {
            emit(args.out.as_ref(), &output::identify_json(&id, &im))?;
            Ok(0)
        }
        Err(e) => {
            eprintln!("degen-nlp: identification failed: {e}");
            Ok(EXIT_FAILURE)
        }
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    problem: &'a str,
    n: usize,
    m: usize,
    points: usize,
    max_gradient_error: f64,
    max_hessian_error: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_check(args: CheckArgs) -> CmdResult {
    let problem = resolve::load_problem(&args.problem)?;
    if !(args.step > 0.0) {
        return Err(anyhow::anyhow!("--step must be positive").into());
    }
    let center = problem
        .metadata()
        .map(|gt| gt.z_star.clone())
        .unwrap_or_else(|| vec![0.0; problem.n()]);
    let mut rng = start_rng(args.seed);
    let (mut grad, mut hess) = (0.0f64, 0.0f64);
    for _ in 0..args.points {
        let z = uniform_in_ball(&mut rng, &center, args.radius);
        let r = problem.check_derivatives(&z, args.step)?;
        grad = grad.max(r.gradient_error);
        hess = hess.max(r.hessian_error);
    }
    let pass = grad <= args.tolerance && hess <= args.tolerance;
    let report = CheckReport {
        problem: problem.name(),
        n: problem.n(),
        m: problem.m(),
        points: args.points,
        max_gradient_error: grad,
        max_hessian_error: hess,
        tolerance: args.tolerance,
        pass,
    };
    emit(args.out.as_ref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_experiment(args: ExperimentArgs) -> CmdResult {
    let runs = experiment::load(&args.config)?;
    let summary = experiment::run_all(runs, &args.out, args.workers)?;
    eprintln!(
        "degen-nlp: {}/{} runs converged; summary in {}",
        summary.converged,
        summary.total,
        args.out.join("summary.json").display()
    );
    Ok(experiment::exit_code(&summary))
}

fn init_logging() {
    let (level, unknown) = match std::env::var("DEGEN_NLP_LOG").as_deref() {
        Err(_) => (log::LevelFilter::Warn, None),
        Ok("quiet") => (log::LevelFilter::Error, None),
        Ok("info") => (log::LevelFilter::Info, None),
        Ok("trace") => (log::LevelFilter::Trace, None),
        Ok(other) => (log::LevelFilter::Warn, Some(other.to_string())),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    if let Some(v) = unknown {
        log::warn!("ignoring DEGEN_NLP_LOG={v}; expected quiet, info or trace");
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Check(a) => cmd_check(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(InputError(e)) => {
            eprintln!("degen-nlp: error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
