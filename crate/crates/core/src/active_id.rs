//! Active-set estimation and the weak/strong split.
//!
//! Near a solution, constraints with `g_i(z) >= -eta^tau` are the active
//! ones. Among those, an index is taken as weakly active when no multiplier
//! satisfying the relaxed stationarity rows
//! `|grad phi(z) + sum_{i in A} l_i grad g_i(z)| <= eta^tau` can push `l_i`
//! up to `eta^tau_hat`. A short sequence of LPs decides this for all
//! candidates at once, dropping the ones that clearly can grow. A final LP
//! then picks a multiplier whose smallest strongly-active component is as
//! large as possible.

use nalgebra::DMatrix;

use crate::error::IdError;
use crate::index_set::IndexSet;
use crate::lp::{solve_lp, Basis, LpProblem, LpSolution, LpStatus};
use crate::model::{Iterate, Problem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdParams {
    tau: f64,
    tau_hat: f64,
}

impl IdParams {
    pub fn new(tau: f64, tau_hat: f64) -> Result<Self, IdError> {
        if !(0.0 < tau_hat && tau_hat < tau && tau < 1.0) {
            return Err(IdError::InvalidParams { tau, tau_hat });
        }
        Ok(Self { tau, tau_hat })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_hat(&self) -> f64 {
        self.tau_hat
    }
}

impl Default for IdParams {
    fn default() -> Self {
        Self {
            tau: 0.6,
            tau_hat: 0.3,
        }
    }
}

/// One pass of the identification loop.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopStep {
    /// Candidate weakly active indices going into this LP.
    pub working_set: IndexSet,
    pub objective: f64,
    /// Full-length LP multiplier (zero outside the estimated active set).
    pub multipliers: Vec<f64>,
    /// Candidates whose LP multiplier reached `eta^tau_hat`.
    pub removed: IndexSet,
    pub lp_iterations: usize,
    pub warm_started: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSetResult {
    pub eta: f64,
    pub estimated_active: IndexSet,
    pub initial_working: IndexSet,
    pub strongly: IndexSet,
    pub weakly: IndexSet,
    pub loop_trace: Vec<LoopStep>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteriorMultiplier {
    pub t_hat: f64,
    pub lambda_hat: Vec<f64>,
}

fn check_tau(tau: f64) -> Result<(), IdError> {
    if !(0.0 < tau && tau < 1.0) {
        return Err(IdError::InvalidTau(tau));
    }
    Ok(())
}

/// `{ i : g_i(z) >= -eta(z, lambda)^tau }`.
pub fn estimate_active(p: &Problem, it: &Iterate, tau: f64) -> Result<IndexSet, IdError> {
    check_tau(tau)?;
    let eta = p.eta(it)?.eta;
    active_from_eta(p, it, eta, tau)
}

fn active_from_eta(p: &Problem, it: &Iterate, eta: f64, tau: f64) -> Result<IndexSet, IdError> {
    let threshold = -eta.powf(tau);
    Ok(p.constraint_values(it.z())?
        .iter()
        .enumerate()
        .filter(|(_, g)| **g >= threshold)
        .map(|(i, _)| i)
        .collect())
}

type RowBlock = (DMatrix<f64>, Vec<f64>, Vec<f64>);

/// Stationarity rows `grad phi(z) + sum_{i in cols} l_i grad g_i(z)` bounded
/// by `+-radius`, as `(matrix, lower, upper)` over the variables `cols`.
fn stationarity_rows(
    p: &Problem,
    z: &[f64],
    cols: &[usize],
    radius: f64,
) -> Result<RowBlock, IdError> {
    let grad_phi = p.objective().gradient(z)?;
    let jac = p.constraint_jacobian(z)?;
    let n = p.n();
    let rows = DMatrix::from_fn(n, cols.len(), |j, k| jac[cols[k]][j]);
    let lower = grad_phi.iter().map(|g| -radius - g).collect();
    let upper = grad_phi.iter().map(|g| radius - g).collect();
    Ok((rows, lower, upper))
}

fn b0est_lp(
    p: &Problem,
    it: &Iterate,
    active: &IndexSet,
    working: &IndexSet,
    eta: f64,
    tau: f64,
) -> Result<LpProblem, IdError> {
    let cols: Vec<usize> = active.iter().collect();
    let (rows, lower, upper) = stationarity_rows(p, it.z(), &cols, eta.powf(tau))?;
    let objective = cols
        .iter()
        .map(|&i| if working.contains(i) { 1.0 } else { 0.0 })
        .collect();
    Ok(LpProblem::new(objective, rows, lower, upper)?)
}

/// LP maximizing the sum of multipliers over `working` subject to relaxed
/// stationarity with multipliers supported on `active`.
///
/// Variables are the multipliers of `active` in increasing index order, each
/// in `[0, +inf)`; there is one two-sided row per component of `z`.
pub fn build_b0est_lp(
    p: &Problem,
    it: &Iterate,
    active: &IndexSet,
    working: &IndexSet,
    tau: f64,
) -> Result<LpProblem, IdError> {
    check_tau(tau)?;
    let eta = p.eta(it)?.eta;
    b0est_lp(p, it, active, working, eta, tau)
}

fn require_optimal(sol: LpSolution) -> Result<LpSolution, IdError> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(IdError::TooFarFromSolution),
        LpStatus::Unbounded => Err(IdError::Unbounded),
    }
}

/// Splits the estimated active set into strongly and weakly active parts.
pub fn procedure_id0(p: &Problem, it: &Iterate, params: IdParams) -> Result<ActiveSetResult, IdError> {
    let eta = p.eta(it)?.eta;
    let active = active_from_eta(p, it, eta, params.tau)?;
    let grow = eta.powf(params.tau_hat);
    let lambda = it.lambda();
    let initial_working: IndexSet = active.iter().filter(|&i| !(lambda[i] >= grow)).collect();

    let mut result = ActiveSetResult {
        eta,
        estimated_active: active.clone(),
        initial_working: initial_working.clone(),
        strongly: active.clone(),
        weakly: IndexSet::new(),
        loop_trace: Vec::new(),
    };
    if initial_working.is_empty() {
        return Ok(result);
    }

    let cols: Vec<usize> = active.iter().collect();
    let mut working = initial_working;
    let mut warm: Option<Basis> = None;
    loop {
        let lp = b0est_lp(p, it, &active, &working, eta, params.tau)?;
        let sol = require_optimal(solve_lp(&lp, warm.as_ref())?)?;
        let mut multipliers = vec![0.0; p.m()];
        for (k, &i) in cols.iter().enumerate() {
            multipliers[i] = sol.point[k];
        }
        let removed: IndexSet = working.iter().filter(|&i| multipliers[i] >= grow).collect();
        log::trace!(
            "id0: working {working} objective {:.6e} removed {removed}",
            sol.objective_value
        );
        result.loop_trace.push(LoopStep {
            working_set: working.clone(),
            objective: sol.objective_value,
            multipliers,
            removed: removed.clone(),
            lp_iterations: sol.iterations,
            warm_started: sol.warm_started,
        });
        warm = sol.basis;

        if removed.is_empty() {
            result.strongly = active.difference(&working);
            result.weakly = working;
            return Ok(result);
        }
        working = working.difference(&removed);
        if working.is_empty() {
            return Ok(result);
        }
    }
}

/// Multiplier estimate supported on `a_plus` maximizing its smallest
/// component subject to relaxed stationarity.
///
/// With `a_plus` empty the estimate is zero, provided zero already satisfies
/// the relaxed stationarity rows.
pub fn interior_multiplier(
    p: &Problem,
    it: &Iterate,
    a_plus: &IndexSet,
    tau: f64,
) -> Result<InteriorMultiplier, IdError> {
    check_tau(tau)?;
    let eta = p.eta(it)?.eta;
    let radius = eta.powf(tau);
    let cols: Vec<usize> = a_plus.iter().collect();
    if cols.is_empty() {
        let grad_phi = p.objective().gradient(it.z())?;
        if grad_phi.iter().all(|g| g.abs() <= radius) {
            return Ok(InteriorMultiplier {
                t_hat: 0.0,
                lambda_hat: vec![0.0; p.m()],
            });
        }
        return Err(IdError::TooFarFromSolution);
    }

    // Variables (t, l_1, ..., l_k); rows t - l_i <= 0 then stationarity.
    let k = cols.len();
    let (stat, stat_lo, stat_hi) = stationarity_rows(p, it.z(), &cols, radius)?;
    let n = p.n();
    let mut rows = DMatrix::zeros(k + n, k + 1);
    for r in 0..k {
        rows[(r, 0)] = 1.0;
        rows[(r, r + 1)] = -1.0;
    }
    rows.view_mut((k, 1), (n, k)).copy_from(&stat);
    let lower = std::iter::repeat_n(f64::NEG_INFINITY, k).chain(stat_lo).collect();
    let upper = std::iter::repeat_n(0.0, k).chain(stat_hi).collect();
    let mut objective = vec![0.0; k + 1];
    objective[0] = 1.0;
    let lp = LpProblem::new(objective, rows, lower, upper)?;
    let sol = require_optimal(solve_lp(&lp, None)?)?;

    let mut lambda_hat = vec![0.0; p.m()];
    for (r, &i) in cols.iter().enumerate() {
        lambda_hat[i] = sol.point[r + 1].max(0.0);
    }
    Ok(InteriorMultiplier {
        t_hat: sol.point[0],
        lambda_hat,
    })
}
