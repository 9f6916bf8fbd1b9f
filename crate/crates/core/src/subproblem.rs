//! Stabilized SQP subproblem.
//!
//! At `(z, lambda)` with `mu >= 0` the step `(dz, l+)` solves
//!
//! ```text
//! min  grad phi^T dz + dz^T H dz / 2 + mu |l+|^2 / 2
//! s.t. g + grad g^T dz - mu (l+ - lambda) <= 0
//! ```
//!
//! a convex QP when `H` is positive definite. Its constraint multipliers
//! coincide with `l+`. For `mu = 0` the multiplier block drops out and the
//! plain SQP subproblem in `dz` remains; `l+` is then read off the QP
//! multipliers.
//!
//! `H` is the Lagrangian Hessian plus the smallest shift from the ladder
//! `0, 1e-8, 1e-7, ...` that admits a Cholesky factorization.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::SubproblemError;
use crate::index_set::IndexSet;
use crate::lp::{solve_lp, LpProblem, LpStatus, FEAS_TOL};
use crate::model::{Iterate, Problem};

/// Maximum accepted subproblem residual.
pub const RESIDUAL_TOL: f64 = 1e-9;

const SHIFT_FIRST: f64 = 1e-8;
const SHIFT_LAST: f64 = 1e8;
const STEP_TOL: f64 = 1e-14;
const MULTIPLIER_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubproblemOptions {
    /// Exponent for the initial working set `{ g_i >= -eta^tau }`.
    pub tau: f64,
}

impl Default for SubproblemOptions {
    fn default() -> Self {
        Self { tau: 0.6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemResult {
    pub dz: Vec<f64>,
    pub lambda_plus: Vec<f64>,
    pub working_set: IndexSet,
    pub kkt_residual: f64,
    pub hessian_shift: f64,
    /// Working-set additions and removals performed.
    pub working_set_changes: usize,
}

/// Lagrangian Hessian at `it` plus the smallest ladder shift that makes it
/// positive definite.
pub fn regularized_hessian(p: &Problem, it: &Iterate) -> Result<(DMatrix<f64>, f64), SubproblemError> {
    let h = p.hess_lagrangian(it)?;
    let n = h.nrows();
    let mut shift = 0.0;
    loop {
        let shifted = &h + DMatrix::identity(n, n) * shift;
        if Cholesky::new(shifted.clone()).is_some() {
            return Ok((shifted, shift));
        }
        shift = if shift == 0.0 { SHIFT_FIRST } else { shift * 10.0 };
        if shift > SHIFT_LAST * 1.5 {
            return Err(SubproblemError::ShiftExhausted(SHIFT_LAST));
        }
    }
}

/// `min x^T q x / 2 + c^T x` subject to `a x <= b`.
struct Qp {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Qp {
    /// Solves `[q a_W^T; a_W 0] [x; nu] = [top; bottom]`.
    fn kkt_solve(
        &self,
        w: &[usize],
        top: &DVector<f64>,
        bottom: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>), SubproblemError> {
        let nv = self.q.nrows();
        let k = w.len();
        let mut kkt = DMatrix::zeros(nv + k, nv + k);
        kkt.view_mut((0, 0), (nv, nv)).copy_from(&self.q);
        for (r, &i) in w.iter().enumerate() {
            for j in 0..nv {
                let v = self.a[(i, j)];
                kkt[(nv + r, j)] = v;
                kkt[(j, nv + r)] = v;
            }
        }
        let mut rhs = DVector::zeros(nv + k);
        rhs.rows_mut(0, nv).copy_from(top);
        rhs.rows_mut(nv, k).copy_from(bottom);
        let sol = kkt.lu().solve(&rhs).ok_or(SubproblemError::Singular)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(SubproblemError::Singular);
        }
        Ok((sol.rows(0, nv).into_owned(), sol.rows(nv, k).into_owned()))
    }

    /// Primal active-set method from a feasible `x` whose working set `w`
    /// holds independent active rows. Returns the final working set.
    fn active_set(&self, mut x: DVector<f64>, mut w: Vec<usize>, cap: usize) -> Result<(Vec<usize>, usize), SubproblemError> {
        let mut changes = 0;
        let m = self.a.nrows();
        loop {
            let grad = &self.q * &x + &self.c;
            let (step, nu) = self.kkt_solve(&w, &(-grad), &DVector::zeros(w.len()))?;
            if step.amax() <= STEP_TOL * (1.0 + x.amax()) {
                let mut drop: Option<(usize, f64)> = None;
                for (r, &v) in nu.iter().enumerate() {
                    if v < -MULTIPLIER_TOL && drop.is_none_or(|(_, best)| v < best) {
                        drop = Some((r, v));
                    }
                }
                let Some((r, _)) = drop else {
                    return Ok((w, changes));
                };
                w.remove(r);
            } else {
                let pnorm = step.norm();
                let mut alpha = 1.0;
                let mut blocking = None;
                for i in (0..m).filter(|i| !w.contains(i)) {
                    let row = self.a.row(i);
                    let ap = row.dot(&step.transpose());
                    if ap <= RANK_TOL * row.norm() * pnorm {
                        continue;
                    }
                    let s = ((self.b[i] - row.dot(&x.transpose())) / ap).max(0.0);
                    if s < alpha {
                        alpha = s;
                        blocking = Some(i);
                    }
                }
                x += step * alpha;
                let Some(i) = blocking else {
                    continue;
                };
                let pos = w.partition_point(|&j| j < i);
                w.insert(pos, i);
            }
            changes += 1;
            if changes > cap {
                return Err(SubproblemError::IterationCap(cap));
            }
        }
    }
}

/// Solves the subproblem with the default options.
pub fn solve_subproblem(p: &Problem, it: &Iterate, mu: f64) -> Result<SubproblemResult, SubproblemError> {
    solve_subproblem_with(p, it, mu, &SubproblemOptions::default())
}

pub fn solve_subproblem_with(
    p: &Problem,
    it: &Iterate,
    mu: f64,
    opts: &SubproblemOptions,
) -> Result<SubproblemResult, SubproblemError> {
    if !(mu >= 0.0) {
        return Err(SubproblemError::NegativeMu(mu));
    }
    let (n, m) = (p.n(), p.m());
    let z = it.z();
    let lambda = it.lambda();
    let (h, hessian_shift) = regularized_hessian(p, it)?;
    let g = p.constraint_values(z)?;
    let jac = p.constraint_jacobian(z)?;
    let grad_phi = p.objective().gradient(z)?;
    let cap = 10 * (n + m);

    let stabilized = mu > 0.0;
    let nv = if stabilized { n + m } else { n };
    let mut q = DMatrix::zeros(nv, nv);
    q.view_mut((0, 0), (n, n)).copy_from(&h);
    let mut c = DVector::zeros(nv);
    c.rows_mut(0, n).copy_from_slice(&grad_phi);
    let mut a = DMatrix::zeros(m, nv);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = jac[i][j];
        }
        b[i] = -g[i];
        if stabilized {
            q[(n + i, n + i)] = mu;
            a[(i, n + i)] = -mu;
            b[i] -= mu * lambda[i];
        }
    }
    let qp = Qp { q, c, a, b };

    let (x0, w0) = if stabilized {
        let radius = p.eta(it)?.eta.powf(opts.tau);
        let mut x0 = DVector::zeros(nv);
        let mut w0 = Vec::new();
        for i in 0..m {
            let level = lambda[i] + g[i] / mu;
            if g[i] >= -radius && lambda[i] > 0.0 {
                w0.push(i);
                x0[n + i] = level;
            } else {
                x0[n + i] = level.max(0.0);
            }
        }
        (x0, w0)
    } else {
        feasible_start(&qp, n)?
    };

    let (w, changes) = qp.active_set(x0, w0, cap)?;

    // Re-solve on the final working set for full accuracy.
    let b_w = DVector::from_iterator(w.len(), w.iter().map(|&i| qp.b[i]));
    let (x, nu) = qp.kkt_solve(&w, &(-&qp.c), &b_w)?;
    let dz: Vec<f64> = x.rows(0, n).iter().copied().collect();
    let mut lambda_plus = vec![0.0; m];
    if stabilized {
        for i in 0..m {
            lambda_plus[i] = x[n + i].max(0.0);
        }
    } else {
        for (r, &i) in w.iter().enumerate() {
            lambda_plus[i] = nu[r].max(0.0);
        }
    }

    let mut result = SubproblemResult {
        dz,
        lambda_plus,
        working_set: w.into_iter().collect(),
        kkt_residual: 0.0,
        hessian_shift,
        working_set_changes: changes,
    };
    result.kkt_residual = subproblem_residual(p, it, mu, &result)?;
    log::trace!(
        "subproblem: mu {mu:.3e} working set {} residual {:.3e} shift {hessian_shift:e}",
        result.working_set,
        result.kkt_residual
    );
    if !(result.kkt_residual <= RESIDUAL_TOL) {
        return Err(SubproblemError::Inaccurate(result.kkt_residual));
    }
    Ok(result)
}

/// Minimum 1-norm feasible point of the linearized constraints and an
/// independent subset of the constraints active there.
fn feasible_start(qp: &Qp, n: usize) -> Result<(DVector<f64>, Vec<usize>), SubproblemError> {
    let m = qp.a.nrows();
    if m == 0 {
        return Ok((DVector::zeros(n), Vec::new()));
    }
    // dz = u - v with u, v >= 0, minimizing sum(u + v).
    let mut rows = DMatrix::zeros(m, 2 * n);
    rows.view_mut((0, 0), (m, n)).copy_from(&qp.a);
    rows.view_mut((0, n), (m, n)).copy_from(&(-&qp.a));
    let lp = LpProblem::new(
        vec![-1.0; 2 * n],
        rows,
        vec![f64::NEG_INFINITY; m],
        qp.b.iter().copied().collect(),
    )?;
    let sol = solve_lp(&lp, None)?;
    if sol.status != LpStatus::Optimal {
        return Err(SubproblemError::InfeasibleLinearization);
    }
    let x = DVector::from_fn(n, |j, _| sol.point[j] - sol.point[n + j]);

    let mut w: Vec<usize> = Vec::new();
    for i in 0..m {
        let slack = qp.b[i] - qp.a.row(i).dot(&x.transpose());
        if slack.abs() > FEAS_TOL * (1.0 + qp.b[i].abs()) {
            continue;
        }
        let mut trial = w.clone();
        trial.push(i);
        let stacked = DMatrix::from_fn(trial.len(), n, |r, j| qp.a[(trial[r], j)]);
        if stacked.rank(RANK_TOL) == trial.len() {
            w = trial;
        }
    }
    Ok((x, w))
}

/// `(H dz + grad phi + grad g l+, min(l+, -(g + grad g^T dz - mu (l+ - lambda))))`.
fn residual_parts(
    p: &Problem,
    it: &Iterate,
    mu: f64,
    r: &SubproblemResult,
) -> Result<(Vec<f64>, Vec<f64>), SubproblemError> {
    let z = it.z();
    let h = p.hess_lagrangian(it)? + DMatrix::identity(p.n(), p.n()) * r.hessian_shift;
    let g = p.constraint_values(z)?;
    let jac = p.constraint_jacobian(z)?;
    let dz = DVector::from_column_slice(&r.dz);
    let mut stat: Vec<f64> = (&h * &dz).iter().copied().collect();
    for (s, gp) in stat.iter_mut().zip(p.objective().gradient(z)?) {
        *s += gp;
    }
    let mut comp = Vec::with_capacity(p.m());
    for i in 0..p.m() {
        let lp = r.lambda_plus[i];
        for (s, d) in stat.iter_mut().zip(&jac[i]) {
            *s += lp * d;
        }
        let lin: f64 = jac[i].iter().zip(&r.dz).map(|(a, b)| a * b).sum();
        let slack = g[i] + lin - mu * (lp - it.lambda()[i]);
        comp.push(lp.min(-slack));
    }
    Ok((stat, comp))
}

/// Euclidean norm of the subproblem stationarity and complementarity
/// residuals at `r`.
pub fn subproblem_residual(p: &Problem, it: &Iterate, mu: f64, r: &SubproblemResult) -> Result<f64, SubproblemError> {
    let (stat, comp) = residual_parts(p, it, mu, r)?;
    Ok(stat.iter().chain(&comp).map(|v| v * v).sum::<f64>().sqrt())
}

/// Largest `|min(l+_i, -slack_i)|` over the constraints.
pub fn complementarity_violation(
    p: &Problem,
    it: &Iterate,
    mu: f64,
    r: &SubproblemResult,
) -> Result<f64, SubproblemError> {
    let (_, comp) = residual_parts(p, it, mu, r)?;
    Ok(comp.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}
