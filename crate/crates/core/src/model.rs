//! Inequality-constrained nonlinear programs `min phi(z) s.t. g(z) <= 0` with
//! polynomial data, and the quantities the algorithms evaluate on them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::index_set::IndexSet;
use crate::poly::PolyFunction;

/// Known solution data for a problem.
///
/// The optimal multiplier set is stored as the convex hull of `slam_vertices`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub z_star: Vec<f64>,
    pub slam_vertices: Vec<Vec<f64>>,
    /// Strongly active constraints.
    pub b_plus: IndexSet,
    /// Weakly active constraints.
    pub b_zero: IndexSet,
    pub mfcq_certificate: Option<Vec<f64>>,
}

impl GroundTruth {
    /// All active constraints, `b_plus` and `b_zero` together.
    pub fn active(&self) -> IndexSet {
        self.b_plus.union(&self.b_zero)
    }
}

/// Primal-dual pair with non-negative multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    z: Vec<f64>,
    lambda: Vec<f64>,
}

impl Iterate {
    pub fn new(z: Vec<f64>, lambda: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((index, &value)) = lambda
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0))
        {
            return Err(ModelError::NegativeMultiplier { index, value });
        }
        Ok(Self { z, lambda })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(self.z.clone(), lambda)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.z, self.lambda)
    }
}

/// Pieces of the KKT residual at an iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    /// Gradient of the Lagrangian in `z`.
    pub stationarity: Vec<f64>,
    /// `min(lambda_i, -g_i(z))` per constraint.
    pub complementarity: Vec<f64>,
    pub eta: f64,
}

/// Worst relative disagreement between analytic and central-difference
/// derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub gradient_error: f64,
    pub hessian_error: f64,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.gradient_error.max(self.hessian_error)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    name: String,
    n: usize,
    objective: PolyFunction,
    constraints: Vec<PolyFunction>,
    metadata: Option<GroundTruth>,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        objective: PolyFunction,
        constraints: Vec<PolyFunction>,
        metadata: Option<GroundTruth>,
    ) -> Result<Self, ModelError> {
        let n = objective.dimension();
        if n == 0 {
            return Err(ModelError::ZeroDimension);
        }
        for (index, c) in constraints.iter().enumerate() {
            if c.dimension() != n {
                return Err(ModelError::ConstraintDimension {
                    index,
                    expected: n,
                    found: c.dimension(),
                });
            }
        }
        let problem = Self {
            name: name.into(),
            n,
            objective,
            constraints,
            metadata: None,
        };
        match metadata {
            Some(gt) => problem.with_metadata(gt),
            None => Ok(problem),
        }
    }

    /// Attaches ground truth after checking it against the problem data.
    pub fn with_metadata(mut self, gt: GroundTruth) -> Result<Self, ModelError> {
        self.validate_ground_truth(&gt)?;
        self.metadata = Some(gt);
        Ok(self)
    }

    fn validate_ground_truth(&self, gt: &GroundTruth) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidGroundTruth(msg));
        let m = self.m();
        if gt.z_star.len() != self.n {
            return bad(format!("zstar has length {}, expected {}", gt.z_star.len(), self.n));
        }
        for v in &gt.slam_vertices {
            if v.len() != m {
                return bad(format!("multiplier vertex has length {}, expected {m}", v.len()));
            }
            if v.iter().any(|x| !(*x >= 0.0)) {
                return bad("multiplier vertex has a negative component".into());
            }
        }
        if gt.b_plus.iter().chain(gt.b_zero.iter()).any(|i| i >= m) {
            return bad("active index out of range".into());
        }
        if !gt.b_plus.intersection(&gt.b_zero).is_empty() {
            return bad("strongly and weakly active sets overlap".into());
        }
        let g = self.constraint_values(&gt.z_star)?;
        let active = active_at(&g, ACTIVE_TOL);
        if active != gt.active() {
            return bad(format!(
                "active set at zstar is {active}, metadata lists {}",
                gt.active()
            ));
        }
        if let Some(cert) = &gt.mfcq_certificate {
            if cert.len() != self.n {
                return bad("mfcq certificate has wrong length".into());
            }
            let jac = self.constraint_jacobian(&gt.z_star)?;
            for i in active.iter() {
                let d: f64 = jac[i].iter().zip(cert).map(|(a, b)| a * b).sum();
                if !(d < 0.0) {
                    return bad(format!("mfcq certificate fails for constraint {}", i + 1));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &PolyFunction {
        &self.objective
    }

    pub fn constraints(&self) -> &[PolyFunction] {
        &self.constraints
    }

    pub fn metadata(&self) -> Option<&GroundTruth> {
        self.metadata.as_ref()
    }

    fn check_iterate(&self, it: &Iterate) -> Result<(), ModelError> {
        if it.z.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                expected: self.n,
                found: it.z.len(),
            });
        }
        if it.lambda.len() != self.m() {
            return Err(ModelError::DimensionMismatch {
                expected: self.m(),
                found: it.lambda.len(),
            });
        }
        Ok(())
    }

    pub fn constraint_values(&self, z: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.constraints.iter().map(|c| c.eval(z)).collect()
    }

    /// Row `i` is the gradient of `g_i`.
    pub fn constraint_jacobian(&self, z: &[f64]) -> Result<Vec<Vec<f64>>, ModelError> {
        self.constraints.iter().map(|c| c.gradient(z)).collect()
    }

    /// `grad phi(z) + sum_i lambda_i grad g_i(z)`.
    pub fn lagrangian_gradient(&self, it: &Iterate) -> Result<Vec<f64>, ModelError> {
        self.check_iterate(it)?;
        let mut grad = self.objective.gradient(&it.z)?;
        for (c, &l) in self.constraints.iter().zip(&it.lambda) {
            if l != 0.0 {
                for (gj, dj) in grad.iter_mut().zip(c.gradient(&it.z)?) {
                    *gj += l * dj;
                }
            }
        }
        Ok(grad)
    }

    pub fn hess_lagrangian(&self, it: &Iterate) -> Result<DMatrix<f64>, ModelError> {
        self.check_iterate(it)?;
        let mut h = self.objective.hessian(&it.z)?;
        for (c, &l) in self.constraints.iter().zip(&it.lambda) {
            if l != 0.0 {
                c.add_hessian_to(&it.z, l, &mut h);
            }
        }
        Ok(h)
    }

    /// KKT residual: Euclidean norm of the Lagrangian gradient stacked on
    /// `min(lambda, -g(z))`.
    pub fn eta(&self, it: &Iterate) -> Result<EtaReport, ModelError> {
        let stationarity = self.lagrangian_gradient(it)?;
        let g = self.constraint_values(&it.z)?;
        let complementarity: Vec<f64> = it
            .lambda
            .iter()
            .zip(&g)
            .map(|(&l, &gi)| l.min(-gi))
            .collect();
        let eta = stationarity
            .iter()
            .chain(&complementarity)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        Ok(EtaReport {
            stationarity,
            complementarity,
            eta,
        })
    }

    /// Compares analytic first and second derivatives of the objective and
    /// every constraint with central differences of step `step` at `z`.
    ///
    /// Errors are `|analytic - fd| / max(1, |analytic|, |fd|)`.
    pub fn check_derivatives(&self, z: &[f64], step: f64) -> Result<DerivativeReport, ModelError> {
        if z.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                expected: self.n,
                found: z.len(),
            });
        }
        let mut report = DerivativeReport::default();
        for f in std::iter::once(&self.objective).chain(&self.constraints) {
            let grad = f.gradient(z)?;
            let hess = f.hessian(z)?;
            let mut zp = z.to_vec();
            for j in 0..self.n {
                zp[j] = z[j] + step;
                let fp = f.eval(&zp)?;
                let gp = f.gradient(&zp)?;
                zp[j] = z[j] - step;
                let fm = f.eval(&zp)?;
                let gm = f.gradient(&zp)?;
                zp[j] = z[j];

                let fd = (fp - fm) / (2.0 * step);
                report.gradient_error = report.gradient_error.max(rel_err(grad[j], fd));
                for l in 0..self.n {
                    let fd = (gp[l] - gm[l]) / (2.0 * step);
                    report.hessian_error = report.hessian_error.max(rel_err(hess[(l, j)], fd));
                }
            }
        }
        Ok(report)
    }
}

/// Tolerance for deciding `g_i(z*) = 0` when validating ground truth; the
/// stored solutions are rounded to the nearest double.
pub const ACTIVE_TOL: f64 = 1e-12;

pub(crate) fn active_at(g: &[f64], tol: f64) -> IndexSet {
    g.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= tol)
        .map(|(i, _)| i)
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
