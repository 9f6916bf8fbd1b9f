//! Turning command-line and config values into problems and starting points.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use degen_nlp::error::ProblemError;
use degen_nlp::problems::{get_problem, parse_problem, REGISTRY};
use degen_nlp::sampling::perturbed_start_seeded;
use degen_nlp::{Iterate, Problem};

/// A registry name, or else a path to a problem file.
pub fn load_problem(spec: &str) -> Result<Problem> {
    if REGISTRY.contains(&spec) {
        return Ok(get_problem(spec)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "unknown problem `{spec}`: not a registry name ({}) and no such file",
            REGISTRY.join(", ")
        );
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_problem(&text).map_err(|e| match e {
        ProblemError::Parse { line, message } => anyhow!("{}:{line}: {message}", path.display()),
        other => anyhow!("{}: {other}", path.display()),
    })
}

/// Comma-separated decimal literals without whitespace.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|tok| {
            if tok.is_empty() || tok.trim() != tok {
                bail!("malformed vector `{text}`: expected comma-separated numbers without spaces");
            }
            tok.parse::<f64>()
                .map_err(|_| anyhow!("malformed vector `{text}`: `{tok}` is not a number"))
        })
        .collect()
}

pub fn explicit_start(p: &Problem, z: Vec<f64>, lambda: Vec<f64>) -> Result<Iterate> {
    if z.len() != p.n() {
        bail!("z0 has {} entries, problem `{}` has n = {}", z.len(), p.name(), p.n());
    }
    if lambda.len() != p.m() {
        bail!("lambda0 has {} entries, problem `{}` has m = {}", lambda.len(), p.name(), p.m());
    }
    Ok(Iterate::new(z, lambda)?)
}

pub fn random_start(p: &Problem, radius: f64, seed: u64) -> Result<Iterate> {
    if !(radius >= 0.0 && radius.is_finite()) {
        bail!("perturbation radius must be a non-negative number, got {radius}");
    }
    perturbed_start_seeded(p, radius, seed)
        .with_context(|| format!("perturbed start for `{}` needs solution metadata", p.name()))
}

/// Explicit `z0`/`lambda0`, or a perturbed start when a seed is given.
pub fn start_from_flags(
    p: &Problem,
    z0: Option<&str>,
    lambda0: Option<&str>,
    seed: Option<u64>,
    radius: f64,
) -> Result<Iterate> {
    match (z0, lambda0, seed) {
        (Some(z), Some(l), None) => explicit_start(p, parse_vector(z)?, parse_vector(l)?),
        (None, None, Some(seed)) => random_start(p, radius, seed),
        (None, None, None) => bail!("a starting point needs --z0 and --lambda0, or --seed"),
        (Some(_), None, _) => bail!("--z0 given without --lambda0"),
        (None, Some(_), _) => bail!("--lambda0 given without --z0"),
        (Some(_), Some(_), Some(_)) => bail!("--seed cannot be combined with --z0/--lambda0"),
    }
}
