//! Dense bounded-variable primal simplex.
//!
//! Solves
//!
//! ```text
//! maximize    c^T x
//! subject to  row_lower <= A x <= row_upper
//!             var_lower <= x   <= var_upper
//! ```
//!
//! Each row gets a slack `s_i = a_i^T x` carrying the row bounds, so the
//! working form is `[A  -I] (x, s) = 0` with box bounds on every column.
//! Bland's rule picks both the entering and the leaving column, which rules
//! out cycling. A cold start runs a phase with artificial columns; a warm
//! start from a previous [`Basis`] skips it when that basis is still primal
//! feasible, which is always the case when only the objective changed.

use nalgebra::DMatrix;

use crate::error::LpError;

pub const FEAS_TOL: f64 = 1e-9;
pub const OPT_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    rows: DMatrix<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    var_lower: Vec<f64>,
    var_upper: Vec<f64>,
}

impl LpProblem {
    /// Variables default to `[0, +inf)`.
    pub fn new(
        objective: Vec<f64>,
        rows: DMatrix<f64>,
        row_lower: Vec<f64>,
        row_upper: Vec<f64>,
    ) -> Result<Self, LpError> {
        let p = objective.len();
        let lp = Self {
            objective,
            rows,
            row_lower,
            row_upper,
            var_lower: vec![0.0; p],
            var_upper: vec![f64::INFINITY; p],
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn with_var_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, LpError> {
        self.var_lower = lower;
        self.var_upper = upper;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the cost vector; the feasible set is unchanged.
    pub fn with_objective(mut self, objective: Vec<f64>) -> Result<Self, LpError> {
        if objective.len() != self.num_vars() {
            return Err(LpError::Malformed(format!(
                "objective has length {}, expected {}",
                objective.len(),
                self.num_vars()
            )));
        }
        self.objective = objective;
        Ok(self)
    }

    fn validate(&self) -> Result<(), LpError> {
        let (q, p) = self.rows.shape();
        let bad = |m: String| Err(LpError::Malformed(m));
        if p != self.objective.len() {
            return bad(format!("{} objective coefficients for {p} columns", self.objective.len()));
        }
        if self.row_lower.len() != q || self.row_upper.len() != q {
            return bad("row bound length mismatch".into());
        }
        if self.var_lower.len() != p || self.var_upper.len() != p {
            return bad("variable bound length mismatch".into());
        }
        for i in 0..q {
            let (l, u) = (self.row_lower[i], self.row_upper[i]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("row {i} has bounds [{l}, {u}]"));
            }
        }
        for j in 0..p {
            let (l, u) = (self.var_lower[j], self.var_upper[j]);
            if !l.is_finite() || u.is_nan() || l > u {
                return bad(format!("variable {j} has bounds [{l}, {u}]"));
            }
        }
        if self.objective.iter().chain(self.rows.iter()).any(|v| !v.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lower.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn row_bounds(&self) -> (&[f64], &[f64]) {
        (&self.row_lower, &self.row_upper)
    }

    pub fn var_bounds(&self) -> (&[f64], &[f64]) {
        (&self.var_lower, &self.var_upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basic/nonbasic partition over the structural and slack columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is optimal.
    pub point: Vec<f64>,
    pub objective_value: f64,
    /// Final basis when optimal.
    pub basis: Option<Basis>,
    /// Simplex iterations (pivots and bound flips) over all phases.
    pub iterations: usize,
    pub warm_started: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free column held at zero.
    Zero,
}

struct Tableau {
    q: usize,
    cols: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn from_lp(lp: &LpProblem) -> Self {
        let (q, p) = lp.rows.shape();
        let mut cols = Vec::with_capacity(p + q);
        for j in 0..p {
            cols.push(lp.rows.column(j).iter().copied().collect());
        }
        for i in 0..q {
            let mut c = vec![0.0; q];
            c[i] = -1.0;
            cols.push(c);
        }
        let lo = lp.var_lower.iter().chain(&lp.row_lower).copied().collect();
        let hi = lp.var_upper.iter().chain(&lp.row_upper).copied().collect();
        Self {
            q,
            cols,
            lo,
            hi,
            x: vec![0.0; p + q],
            state: vec![State::Lower; p + q],
            basis: Vec::with_capacity(q),
            iterations: 0,
        }
    }

    fn nonbasic_value(&self, j: usize, s: State) -> f64 {
        match s {
            State::Lower => self.lo[j],
            State::Upper => self.hi[j],
            State::Zero | State::Basic => 0.0,
        }
    }

    /// Resting state for a nonbasic column: lower bound when finite, else
    /// upper, else zero.
    fn rest_state(&self, j: usize, prefer_upper: bool) -> State {
        if prefer_upper && self.hi[j].is_finite() {
            State::Upper
        } else if self.lo[j].is_finite() {
            State::Lower
        } else if self.hi[j].is_finite() {
            State::Upper
        } else {
            State::Zero
        }
    }

    fn basis_inverse(&self) -> Result<DMatrix<f64>, LpError> {
        let q = self.q;
        if q == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let b = DMatrix::from_fn(q, q, |i, r| self.cols[self.basis[r]][i]);
        b.lu()
            .try_inverse()
            .ok_or(LpError::NumericalBreakdown { threshold: PIVOT_TOL })
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh_basic(&mut self, binv: &DMatrix<f64>) {
        let q = self.q;
        let mut rhs = vec![0.0; q];
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for i in 0..q {
                    rhs[i] -= col[i] * self.x[j];
                }
            }
        }
        for r in 0..q {
            let v = (0..q).map(|i| binv[(r, i)] * rhs[i]).sum();
            self.x[self.basis[r]] = v;
        }
    }

    fn column_in_basis(&self, binv: &DMatrix<f64>, j: usize) -> Vec<f64> {
        let col = &self.cols[j];
        (0..self.q)
            .map(|r| (0..self.q).map(|i| binv[(r, i)] * col[i]).sum())
            .collect()
    }

    fn primal_feasible(&self) -> bool {
        self.basis
            .iter()
            .all(|&b| self.x[b] >= self.lo[b] - FEAS_TOL && self.x[b] <= self.hi[b] + FEAS_TOL)
    }

    /// Runs simplex iterations maximizing `cost^T x` from a primal feasible
    /// basis.
    fn optimize(&mut self, cost: &[f64]) -> Result<Outcome, LpError> {
        let q = self.q;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(LpError::IterationLimit(MAX_ITERATIONS));
            }
            let binv = self.basis_inverse()?;
            self.refresh_basic(&binv);

            // Simplex multipliers y = B^{-T} c_B.
            let y: Vec<f64> = (0..q)
                .map(|i| (0..q).map(|r| cost[self.basis[r]] * binv[(r, i)]).sum())
                .collect();

            // Bland: lowest-index improving column.
            let mut entering = None;
            for j in 0..self.cols.len() {
                let s = self.state[j];
                if s == State::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
                let dir = match s {
                    State::Lower if d > OPT_TOL => 1.0,
                    State::Upper if d < -OPT_TOL => -1.0,
                    State::Zero if d.abs() > OPT_TOL => d.signum(),
                    _ => continue,
                };
                entering = Some((j, dir));
                break;
            }
            let Some((j, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let w = self.column_in_basis(&binv, j);
            let mut step = self.hi[j] - self.lo[j];
            let mut leaving: Option<(usize, State)> = None;
            let mut best_var = usize::MAX;
            for r in 0..q {
                if w[r].abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let rate = -dir * w[r];
                let (limit, bound) = if rate < 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lo[b]) / -rate).max(0.0), State::Lower)
                } else {
                    if !self.hi[b].is_finite() {
                        continue;
                    }
                    (((self.hi[b] - self.x[b]) / rate).max(0.0), State::Upper)
                };
                // Ties go to the lowest variable index; a tie with the
                // entering column's own range is resolved as a pivot.
                let take = if !step.is_finite() {
                    true
                } else {
                    let tol = PIVOT_TOL * (1.0 + step.abs());
                    if limit < step - tol {
                        true
                    } else if limit <= step + tol {
                        leaving.is_none() || b < best_var
                    } else {
                        false
                    }
                };
                if take {
                    step = limit;
                    leaving = Some((r, bound));
                    best_var = b;
                }
            }
            if !step.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            self.x[j] += dir * step;
            for r in 0..q {
                let b = self.basis[r];
                self.x[b] -= dir * step * w[r];
            }
            match leaving {
                Some((r, bound)) => {
                    let b = self.basis[r];
                    self.state[b] = bound;
                    self.x[b] = self.nonbasic_value(b, bound);
                    self.basis[r] = j;
                    self.state[j] = State::Basic;
                }
                None => {
                    let flipped = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.state[j] = flipped;
                    self.x[j] = self.nonbasic_value(j, flipped);
                }
            }
        }
    }

    fn export_basis(&self, width: usize) -> Basis {
        Basis {
            basic: self.basis.clone(),
            at_upper: (0..width).map(|j| self.state[j] == State::Upper).collect(),
        }
    }

    /// Installs a previous basis; returns false when it is unusable (wrong
    /// shape, singular, or no longer primal feasible).
    fn install(&mut self, warm: &Basis) -> bool {
        let width = self.cols.len();
        if warm.basic.len() != self.q || warm.at_upper.len() != width {
            return false;
        }
        let mut seen = vec![false; width];
        for &b in &warm.basic {
            if b >= width || seen[b] {
                return false;
            }
            seen[b] = true;
        }
        for j in 0..width {
            self.state[j] = if seen[j] {
                State::Basic
            } else {
                self.rest_state(j, warm.at_upper[j])
            };
            self.x[j] = self.nonbasic_value(j, self.state[j]);
        }
        self.basis = warm.basic.clone();
        let Ok(binv) = self.basis_inverse() else {
            return false;
        };
        self.refresh_basic(&binv);
        self.primal_feasible()
    }

    /// Sets up a cold start and returns the phase-one cost, or `None` when
    /// the slack basis is already feasible. Artificial columns are appended
    /// after the structural and slack columns.
    fn cold_start(&mut self, p: usize) -> Option<Vec<f64>> {
        let q = self.q;
        for j in 0..p {
            self.state[j] = self.rest_state(j, false);
            self.x[j] = self.nonbasic_value(j, self.state[j]);
        }
        let mut artificial = Vec::new();
        self.basis.clear();
        for i in 0..q {
            let s = p + i;
            let r: f64 = (0..p).map(|j| self.cols[j][i] * self.x[j]).sum();
            if r >= self.lo[s] - FEAS_TOL && r <= self.hi[s] + FEAS_TOL {
                self.state[s] = State::Basic;
                self.x[s] = r;
                self.basis.push(s);
            } else {
                let (bound, v) = if r < self.lo[s] {
                    (State::Lower, self.lo[s])
                } else {
                    (State::Upper, self.hi[s])
                };
                self.state[s] = bound;
                self.x[s] = v;
                // a_i^T x - s_i + sign * art = 0 with art = |v - r|.
                let mut col = vec![0.0; q];
                col[i] = (v - r).signum();
                let a = self.cols.len();
                self.cols.push(col);
                self.lo.push(0.0);
                self.hi.push(f64::INFINITY);
                self.x.push((v - r).abs());
                self.state.push(State::Basic);
                self.basis.push(a);
                artificial.push(a);
            }
        }
        if artificial.is_empty() {
            return None;
        }
        let mut cost = vec![0.0; self.cols.len()];
        for a in artificial {
            cost[a] = -1.0;
        }
        Some(cost)
    }

    /// Pivots zero-valued artificial columns out of the basis, then drops
    /// every artificial column.
    fn remove_artificials(&mut self, width: usize) -> Result<(), LpError> {
        for r in 0..self.q {
            if self.basis[r] < width {
                continue;
            }
            let binv = self.basis_inverse()?;
            let mut best: Option<(usize, f64)> = None;
            for j in 0..width {
                if self.state[j] == State::Basic {
                    continue;
                }
                let v: f64 = (0..self.q).map(|i| binv[(r, i)] * self.cols[j][i]).sum();
                if v.abs() > best.map_or(PIVOT_TOL, |b| b.1) {
                    best = Some((j, v.abs()));
                }
            }
            let (j, _) = best.ok_or(LpError::NumericalBreakdown { threshold: PIVOT_TOL })?;
            let a = self.basis[r];
            self.state[a] = State::Lower;
            self.x[a] = 0.0;
            self.basis[r] = j;
            self.state[j] = State::Basic;
            self.iterations += 1;
        }
        self.cols.truncate(width);
        self.lo.truncate(width);
        self.hi.truncate(width);
        self.x.truncate(width);
        self.state.truncate(width);
        let binv = self.basis_inverse()?;
        self.refresh_basic(&binv);
        Ok(())
    }
}

/// Solves `lp`, warm-starting from `warm` when it is still usable.
pub fn solve_lp(lp: &LpProblem, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let (q, p) = lp.rows.shape();
    let width = p + q;
    let mut t = Tableau::from_lp(lp);
    let cost: Vec<f64> = lp.objective.iter().copied().chain(std::iter::repeat_n(0.0, q)).collect();

    let warm_started = warm.is_some_and(|b| t.install(b));
    if !warm_started {
        t = Tableau::from_lp(lp);
        if let Some(phase_one) = t.cold_start(p) {
            match t.optimize(&phase_one)? {
                Outcome::Optimal => {}
                Outcome::Unbounded => unreachable!("phase one objective is bounded above by zero"),
            }
            let infeasibility: f64 = t.x[width..].iter().sum();
            if infeasibility > FEAS_TOL {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    point: Vec::new(),
                    objective_value: f64::NAN,
                    basis: None,
                    iterations: t.iterations,
                    warm_started: false,
                });
            }
            t.remove_artificials(width)?;
        }
    }

    let status = match t.optimize(&cost)? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            status,
            point: Vec::new(),
            objective_value: f64::NAN,
            basis: None,
            iterations: t.iterations,
            warm_started,
        });
    }
    let point = t.x[..p].to_vec();
    let objective_value = point.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        status,
        point,
        objective_value,
        basis: Some(t.export_basis(width)),
        iterations: t.iterations,
        warm_started,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], a: &[&[f64]], lo: &[f64], hi: &[f64]) -> LpProblem {
        let q = a.len();
        let p = c.len();
        let rows = DMatrix::from_fn(q, p, |i, j| a[i][j]);
        LpProblem::new(c.to_vec(), rows, lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn single_variable_upper_row() {
        let s = solve_lp(&lp(&[1.0], &[&[1.0]], &[f64::NEG_INFINITY], &[1.0]), None).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.point[0] - 1.0).abs() < 1e-12);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let s = solve_lp(&lp(&[1.0], &[&[1.0]], &[f64::NEG_INFINITY], &[-1.0]), None).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn reversed_row_bounds_rejected() {
        let rows = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            LpProblem::new(vec![1.0], rows, vec![1.0], vec![-1.0]),
            Err(LpError::Malformed(_))
        ));
    }

    #[test]
    fn unbounded_detected() {
        let s = solve_lp(&lp(&[1.0, 0.0], &[&[1.0, -1.0]], &[-1.0], &[1.0]), None).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn two_sided_rows_and_worked_identification_lp() {
        // max l2 + l3 s.t. -1.01 + l1 + 2 l2 in [-r, r], -0.01 + l3 in [-r, r]
        // optimum l2 = (1.01 + r)/2 with l1 = 0 and l3 = 0.01 + r.
        let r = 6.82e-4f64.sqrt().sqrt();
        let s = solve_lp(
            &lp(
                &[0.0, 1.0, 1.0],
                &[&[1.0, 2.0, 0.0], &[0.0, 0.0, 1.0]],
                &[1.01 - r, 0.01 - r],
                &[1.01 + r, 0.01 + r],
            ),
            None,
        )
        .unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        let expect = (1.01 + r) / 2.0 + 0.01 + r;
        assert!((s.objective_value - expect).abs() < 1e-12);
        assert!(s.point[0].abs() < 1e-12);
    }

    #[test]
    fn no_rows() {
        let s = solve_lp(
            &lp(&[1.0, -1.0], &[], &[], &[])
                .with_var_bounds(vec![0.0, -2.0], vec![3.0, 5.0])
                .unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(s.point, vec![3.0, -2.0]);
    }

    #[test]
    fn no_columns() {
        let rows = DMatrix::zeros(2, 0);
        let ok = LpProblem::new(vec![], rows.clone(), vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(solve_lp(&ok, None).unwrap().status, LpStatus::Optimal);
        let bad = LpProblem::new(vec![], rows, vec![0.5, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(solve_lp(&bad, None).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn warm_start_after_cost_change() {
        let base = lp(
            &[1.0, 1.0, 0.0],
            &[&[1.0, 2.0, 1.0], &[1.0, -1.0, 0.0], &[0.0, 1.0, 3.0]],
            &[1.0, -2.0, f64::NEG_INFINITY],
            &[4.0, 2.0, 6.0],
        );
        let cold = solve_lp(&base, None).unwrap();
        let changed = base.with_objective(vec![0.0, 1.0, 1.0]).unwrap();
        let cold2 = solve_lp(&changed, None).unwrap();
        let warm2 = solve_lp(&changed, cold.basis.as_ref()).unwrap();
        assert!(warm2.warm_started);
        assert!((warm2.objective_value - cold2.objective_value).abs() < 1e-9);
        assert!(warm2.iterations <= cold2.iterations);
    }

    #[test]
    fn stale_basis_falls_back_to_cold_start() {
        let a = lp(&[1.0], &[&[1.0]], &[0.0], &[1.0]);
        let sol = solve_lp(&a, None).unwrap();
        // Same basis stays feasible after shifting the row bounds up.
        let moved = lp(&[1.0], &[&[1.0]], &[2.0], &[3.0]);
        let warm = solve_lp(&moved, sol.basis.as_ref()).unwrap();
        assert!((warm.objective_value - 3.0).abs() < 1e-12);
        // Shifting them below zero makes it infeasible for x >= 0.
        let infeasible = lp(&[1.0], &[&[1.0]], &[-5.0], &[-4.0]);
        let warm = solve_lp(&infeasible, sol.basis.as_ref()).unwrap();
        assert!(!warm.warm_started);
        assert_eq!(warm.status, LpStatus::Infeasible);

        let garbage = Basis { basic: vec![7], at_upper: vec![false; 2] };
        assert!(!solve_lp(&a, Some(&garbage)).unwrap().warm_started);
    }

    #[test]
    fn deterministic() {
        let a = lp(
            &[1.0, 2.0],
            &[&[1.0, 1.0], &[1.0, -1.0]],
            &[f64::NEG_INFINITY, -1.0],
            &[2.0, 1.0],
        );
        assert_eq!(solve_lp(&a, None).unwrap(), solve_lp(&a, None).unwrap());
    }
}
