//! Stabilized SQP with multiplier adjustment, and the two baselines.
//!
//! Each iteration solves the subproblem at `(z_k, lambda_k)` with
//! `mu_k = eta_k^sigma`. With adjustment enabled a step is accepted only if
//! it reduces `eta` to at most `eta_k^(1 + sigma/2)`; otherwise the active
//! set is re-identified at `(z_k, lambda_k)` and `lambda_k` is replaced by
//! the interior multiplier estimate before trying again.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::active_id::{interior_multiplier, procedure_id0, IdParams};
use crate::error::{DriverError, IdError, ModelError};
use crate::model::{Iterate, Problem};
use crate::problems::distance_to_solution;
use crate::subproblem::{complementarity_violation, solve_subproblem_with, SubproblemOptions};

/// Consecutive multiplier adjustments allowed at one iterate.
pub const MAX_ADJUSTMENTS: usize = 3;

/// Lower end of the window of `delta` (or `eta`) values used for order
/// estimates.
pub const Q_ORDER_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Ssqpa,
    Ssqp,
    Sqp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ssqpa => "ssqpa",
            Algorithm::Ssqp => "ssqp",
            Algorithm::Sqp => "sqp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = DriverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ssqpa" => Ok(Algorithm::Ssqpa),
            "ssqp" => Ok(Algorithm::Ssqp),
            "sqp" => Ok(Algorithm::Sqp),
            other => Err(DriverError::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub sigma: f64,
    pub tau: f64,
    pub tau_hat: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ssqpa,
            sigma: 0.5,
            tau: 0.6,
            tau_hat: 0.3,
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        if !(0.0 < self.sigma && self.sigma < 1.0) {
            return Err(DriverError::InvalidConfig(format!("sigma {} not in (0,1)", self.sigma)));
        }
        if !(0.0 < self.tau_hat && self.tau_hat < self.tau && self.tau < 1.0) {
            return Err(DriverError::InvalidConfig(format!(
                "need 0 < tau_hat < tau < 1, got tau {} tau_hat {}",
                self.tau, self.tau_hat
            )));
        }
        if !(self.tol > 0.0) {
            return Err(DriverError::InvalidConfig(format!("tol {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(DriverError::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn id_params(&self) -> Result<IdParams, DriverError> {
        IdParams::new(self.tau, self.tau_hat).map_err(|e| DriverError::InvalidConfig(e.to_string()))
    }

    fn mu(&self, eta: f64) -> f64 {
        match self.algorithm {
            Algorithm::Sqp => 0.0,
            Algorithm::Ssqpa | Algorithm::Ssqp => eta.powf(self.sigma),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    SubproblemFailure,
    IdentificationFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::SubproblemFailure => "subproblem_failure",
            SolveStatus::IdentificationFailure => "identification_failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Residuals of one subproblem solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubproblemCheck {
    pub residual: f64,
    pub complementarity: f64,
}

/// State of iterate `k` after any multiplier adjustment at `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub eta: f64,
    pub delta: Option<f64>,
    /// Stabilization used for the step from this iterate.
    pub mu: f64,
    pub n_aplus: usize,
    pub n_a0: usize,
    /// `lambda_k` was replaced after a rejected step.
    pub adjusted: bool,
    /// Hessian shift of the last subproblem solved at this iterate.
    pub hshift: f64,
    /// Every subproblem solved at this iterate, rejected ones included.
    #[serde(skip)]
    pub solves: Vec<SubproblemCheck>,
    #[serde(skip)]
    pub z: Vec<f64>,
    #[serde(skip)]
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveTrace {
    pub problem: String,
    pub algorithm: Algorithm,
    pub status: SolveStatus,
    pub message: Option<String>,
    pub records: Vec<IterationRecord>,
    pub q_ratios: Vec<f64>,
    pub final_z: Vec<f64>,
    pub final_lambda: Vec<f64>,
}

impl SolveTrace {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn final_eta(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.eta)
    }

    pub fn final_delta(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.delta)
    }

    pub fn final_iterate(&self) -> Iterate {
        Iterate::new(self.final_z.clone(), self.final_lambda.clone())
            .expect("trace holds a valid iterate")
    }
}

/// Runs the algorithm selected in `cfg`.
pub fn solve(p: &Problem, start: &Iterate, cfg: &SolverConfig) -> Result<SolveTrace, DriverError> {
    cfg.validate()?;
    check_dimensions(p, start)?;
    Ok(Runner::new(p, cfg).run(start.clone()))
}

pub fn run_ssqpa(p: &Problem, start: &Iterate, cfg: &SolverConfig) -> Result<SolveTrace, DriverError> {
    if cfg.algorithm != Algorithm::Ssqpa {
        return Err(DriverError::InvalidConfig(format!(
            "run_ssqpa called with algorithm {}",
            cfg.algorithm
        )));
    }
    solve(p, start, cfg)
}

pub fn run_baseline(p: &Problem, start: &Iterate, cfg: &SolverConfig) -> Result<SolveTrace, DriverError> {
    if cfg.algorithm == Algorithm::Ssqpa {
        return Err(DriverError::InvalidConfig("run_baseline needs ssqp or sqp".into()));
    }
    solve(p, start, cfg)
}

fn check_dimensions(p: &Problem, it: &Iterate) -> Result<(), DriverError> {
    if it.z().len() != p.n() {
        return Err(ModelError::DimensionMismatch {
            expected: p.n(),
            found: it.z().len(),
        }
        .into());
    }
    if it.lambda().len() != p.m() {
        return Err(ModelError::DimensionMismatch {
            expected: p.m(),
            found: it.lambda().len(),
        }
        .into());
    }
    Ok(())
}

struct Runner<'a> {
    p: &'a Problem,
    cfg: &'a SolverConfig,
    opts: SubproblemOptions,
    n_aplus: usize,
    n_a0: usize,
}

enum Stop {
    Converged,
    MaxIter,
    Subproblem(String),
    Identification(String),
}

impl<'a> Runner<'a> {
    fn new(p: &'a Problem, cfg: &'a SolverConfig) -> Self {
        Self {
            p,
            cfg,
            opts: SubproblemOptions { tau: cfg.tau },
            n_aplus: 0,
            n_a0: 0,
        }
    }

    fn delta(&self, it: &Iterate) -> Option<f64> {
        self.p.metadata()?;
        distance_to_solution(self.p, it).ok()
    }

    fn eta(&self, it: &Iterate) -> f64 {
        self.p.eta(it).expect("dimensions checked").eta
    }

    /// Identification followed by the interior multiplier estimate.
    fn adjust(&mut self, it: &Iterate) -> Result<Iterate, IdError> {
        let id = procedure_id0(self.p, it, IdParams::new(self.cfg.tau, self.cfg.tau_hat)?)?;
        let im = interior_multiplier(self.p, it, &id.strongly, self.cfg.tau)?;
        self.n_aplus = id.strongly.len();
        self.n_a0 = id.weakly.len();
        log::debug!(
            "identification: A = {} A+ = {} A0 = {} t = {:.6e}",
            id.estimated_active,
            id.strongly,
            id.weakly,
            im.t_hat
        );
        Ok(it.with_lambda(im.lambda_hat)?)
    }

    fn record(&self, k: usize, it: &Iterate, adjusted: bool) -> IterationRecord {
        let eta = self.eta(it);
        IterationRecord {
            k,
            eta,
            delta: self.delta(it),
            mu: self.cfg.mu(eta),
            n_aplus: self.n_aplus,
            n_a0: self.n_a0,
            adjusted,
            hshift: 0.0,
            solves: Vec::new(),
            z: it.z().to_vec(),
            lambda: it.lambda().to_vec(),
        }
    }

    fn run(mut self, start: Iterate) -> SolveTrace {
        let with_adjustment = self.cfg.algorithm == Algorithm::Ssqpa;
        let mut records = Vec::new();
        let mut it = start;
        let mut k = 0;
        let mut adjustments = 0;
        let mut solves = Vec::new();
        let mut hshift = 0.0;

        let stop = 'outer: {
            if with_adjustment {
                match self.adjust(&it) {
                    Ok(next) => it = next,
                    Err(e) => break 'outer Stop::Identification(e.to_string()),
                }
            }
            loop {
                let eta = self.eta(&it);
                if eta < self.cfg.tol {
                    break 'outer Stop::Converged;
                }
                if k >= self.cfg.max_iter {
                    break 'outer Stop::MaxIter;
                }
                let mu = self.cfg.mu(eta);
                let sol = match solve_subproblem_with(self.p, &it, mu, &self.opts) {
                    Ok(s) => s,
                    Err(e) => break 'outer Stop::Subproblem(e.to_string()),
                };
                hshift = sol.hessian_shift;
                solves.push(SubproblemCheck {
                    residual: sol.kkt_residual,
                    complementarity: complementarity_violation(self.p, &it, mu, &sol).unwrap_or(f64::NAN),
                });
                let z_next: Vec<f64> = it.z().iter().zip(&sol.dz).map(|(a, b)| a + b).collect();
                let next = Iterate::new(z_next, sol.lambda_plus).expect("multipliers are clamped");
                let eta_next = self.eta(&next);
                let threshold = eta.powf(1.0 + self.cfg.sigma / 2.0);
                log::info!(
                    "k {k} eta {eta:.6e} mu {mu:.3e} -> eta {eta_next:.6e} (threshold {threshold:.3e})"
                );

                if !with_adjustment || eta_next <= threshold {
                    let mut rec = self.record(k, &it, adjustments > 0);
                    rec.mu = mu;
                    rec.hshift = hshift;
                    rec.solves = std::mem::take(&mut solves);
                    records.push(rec);
                    it = next;
                    k += 1;
                    adjustments = 0;
                    hshift = 0.0;
                    continue;
                }
                if adjustments == MAX_ADJUSTMENTS {
                    break 'outer Stop::Identification(format!(
                        "step rejected after {MAX_ADJUSTMENTS} consecutive adjustments"
                    ));
                }
                match self.adjust(&it) {
                    Ok(adjusted) => it = adjusted,
                    Err(e) => break 'outer Stop::Identification(e.to_string()),
                }
                adjustments += 1;
            }
        };

        let mut last = self.record(k, &it, adjustments > 0);
        last.hshift = hshift;
        last.solves = solves;
        records.push(last);
        let (status, message) = match stop {
            Stop::Converged => (SolveStatus::Converged, None),
            Stop::MaxIter => (SolveStatus::MaxIter, None),
            Stop::Subproblem(m) => (SolveStatus::SubproblemFailure, Some(m)),
            Stop::Identification(m) => (SolveStatus::IdentificationFailure, Some(m)),
        };
        if let Some(m) = &message {
            log::warn!("{}: {status}: {m}", self.p.name());
        }
        let (final_z, final_lambda) = it.into_parts();
        let mut trace = SolveTrace {
            problem: self.p.name().to_string(),
            algorithm: self.cfg.algorithm,
            status,
            message,
            records,
            q_ratios: Vec::new(),
            final_z,
            final_lambda,
        };
        trace.q_ratios = q_order_ratios(&trace).unwrap_or_default();
        trace
    }
}

/// `log delta_{k+1} / log delta_k` over consecutive records with both values
/// in `(1e-13, 1)`. Uses `eta` when any record lacks `delta`.
pub fn q_order_ratios(trace: &SolveTrace) -> Result<Vec<f64>, DriverError> {
    let values: Vec<f64> = if trace.records.iter().all(|r| r.delta.is_some()) {
        trace.records.iter().filter_map(|r| r.delta).collect()
    } else {
        trace.records.iter().map(|r| r.eta).collect()
    };
    q_order_ratios_from(&values)
}

/// Order estimates for a plain sequence; needs at least three values inside
/// the usable window.
pub fn q_order_ratios_from(values: &[f64]) -> Result<Vec<f64>, DriverError> {
    let usable = |v: f64| v > Q_ORDER_FLOOR && v < 1.0;
    let count = values.iter().filter(|v| usable(**v)).count();
    if count < 3 {
        return Err(DriverError::TooFewIterations(count));
    }
    Ok(values
        .windows(2)
        .filter(|w| usable(w[0]) && usable(w[1]))
        .map(|w| w[1].ln() / w[0].ln())
        .collect())
}
