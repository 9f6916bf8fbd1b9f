//! Batch runs described by a JSON config.
//!
//! ```json
//! {
//!   "runs": [
//!     { "problem": "dep1", "start": "perturb 1e-3 7", "solver": { "algorithm": "ssqpa" } },
//!     { "problem": "my.nlp", "start": { "z": [0.1], "lambda": [0.0] } }
//!   ]
//! }
//! ```
//!
//! `problem` is a registry name or a problem file path, relative paths being
//! taken from the config file's directory. `solver` fields default to the
//! solver defaults. Each run writes `run-NNN.csv` into the output directory,
//! and `summary.json` collects one entry per run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use degen_nlp::active_id::procedure_id0;
use degen_nlp::driver::{solve, SolveStatus, SolveTrace, SolverConfig};
use degen_nlp::problems::REGISTRY;
use degen_nlp::{Iterate, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::trace_csv;
use crate::resolve::{explicit_start, load_problem, random_start};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: String,
    pub start: StartSpec,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Explicit { z: Vec<f64>, lambda: Vec<f64> },
    /// `"perturb <radius> <seed>"`.
    Perturb(String),
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub problem: String,
    pub algorithm: String,
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_eta: f64,
    pub final_delta: Option<f64>,
    pub min_q_ratio: Option<f64>,
    pub classification_correct: Option<bool>,
    pub trace_file: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub converged: usize,
    pub runs: Vec<RunSummary>,
}

/// A validated run ready to execute.
pub struct PreparedRun {
    index: usize,
    problem: Problem,
    start: Iterate,
    cfg: SolverConfig,
}

fn parse_perturb(text: &str) -> Result<(f64, u64)> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    match parts.as_slice() {
        ["perturb", radius, seed] => {
            let radius = radius
                .parse()
                .map_err(|_| anyhow!("invalid radius `{radius}` in `{text}`"))?;
            let seed = seed.parse().map_err(|_| anyhow!("invalid seed `{seed}` in `{text}`"))?;
            Ok((radius, seed))
        }
        _ => bail!("start `{text}` is not of the form `perturb <radius> <seed>`"),
    }
}

fn resolve_problem(spec: &str, base: &Path) -> Result<Problem> {
    if REGISTRY.contains(&spec) || Path::new(spec).is_absolute() {
        return load_problem(spec);
    }
    let joined = base.join(spec);
    load_problem(joined.to_str().unwrap_or(spec))
}

fn prepare(config: ExperimentConfig, base: &Path) -> Result<Vec<PreparedRun>> {
    config
        .runs
        .into_iter()
        .enumerate()
        .map(|(index, spec)| {
            let ctx = || format!("run {index}");
            let problem = resolve_problem(&spec.problem, base).with_context(ctx)?;
            let start = match spec.start {
                StartSpec::Explicit { z, lambda } => explicit_start(&problem, z, lambda),
                StartSpec::Perturb(text) => {
                    let (radius, seed) = parse_perturb(&text)?;
                    random_start(&problem, radius, seed)
                }
            }
            .with_context(ctx)?;
            spec.solver.validate().with_context(ctx)?;
            Ok(PreparedRun {
                index,
                problem,
                start,
                cfg: spec.solver,
            })
        })
        .collect()
}

fn classification_correct(run: &PreparedRun) -> Option<bool> {
    let gt = run.problem.metadata()?;
    let params = run.cfg.id_params().ok()?;
    Some(match procedure_id0(&run.problem, &run.start, params) {
        Ok(r) => r.strongly == gt.b_plus && r.weakly == gt.b_zero,
        Err(_) => false,
    })
}

fn execute(run: &PreparedRun, out_dir: &Path) -> Result<RunSummary> {
    let trace: SolveTrace = solve(&run.problem, &run.start, &run.cfg)?;
    let file = format!("run-{:03}.csv", run.index);
    fs::write(out_dir.join(&file), trace_csv(&trace))
        .with_context(|| format!("writing {}", out_dir.join(&file).display()))?;
    log::info!("run {} ({}): {}", run.index, run.problem.name(), trace.status);
    Ok(RunSummary {
        index: run.index,
        problem: run.problem.name().to_string(),
        algorithm: run.cfg.algorithm.to_string(),
        status: trace.status,
        iterations: trace.iterations(),
        final_eta: trace.final_eta(),
        final_delta: trace.final_delta(),
        min_q_ratio: trace.q_ratios.iter().copied().reduce(f64::min),
        classification_correct: classification_correct(run),
        trace_file: file,
    })
}

/// Loads and checks the config. Errors here are input errors.
pub fn load(config_path: &Path) -> Result<Vec<PreparedRun>> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    prepare(config, &base)
}

/// Runs everything on `workers` threads (0 for the rayon default) and writes
/// the traces and `summary.json` into `out_dir`.
pub fn run_all(runs: Vec<PreparedRun>, out_dir: &Path, workers: usize) -> Result<Summary> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let results: Vec<Result<RunSummary>> =
        pool.install(|| runs.par_iter().map(|r| execute(r, out_dir)).collect());
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = Summary {
        total: runs.len(),
        converged: runs.iter().filter(|r| r.status == SolveStatus::Converged).count(),
        runs,
    };
    let path: PathBuf = out_dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(summary)
}

/// 0 when every run converged, 3 when any run failed in a subproblem or in
/// identification, 1 otherwise.
pub fn exit_code(summary: &Summary) -> u8 {
    if summary
        .runs
        .iter()
        .any(|r| matches!(r.status, SolveStatus::SubproblemFailure | SolveStatus::IdentificationFailure))
    {
        3
    } else if summary.converged == summary.total {
        0
    } else {
        1
    }
}
