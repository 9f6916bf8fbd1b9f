//! Multivariate polynomials stored as term lists.
//!
//! Every objective and constraint in this crate is a polynomial, so values,
//! gradients and Hessians are exact up to floating-point roundoff.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// A single monomial `coef * z_1^e_1 * ... * z_n^e_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn new(coef: f64, exponents: Vec<u32>) -> Self {
        Self { coef, exponents }
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(z)
            .fold(self.coef, |acc, (&e, &x)| acc * pow(x, e))
    }

    /// d/dz_j of the term.
    fn partial(&self, z: &[f64], j: usize) -> f64 {
        let ej = self.exponents[j];
        if ej == 0 {
            return 0.0;
        }
        let mut acc = self.coef * f64::from(ej);
        for (k, (&e, &x)) in self.exponents.iter().zip(z).enumerate() {
            acc *= if k == j { pow(x, e - 1) } else { pow(x, e) };
        }
        acc
    }

    fn second_partial(&self, z: &[f64], j: usize, l: usize) -> f64 {
        let mut exps = self.exponents.clone();
        let mut acc = self.coef;
        for idx in [j, l] {
            if exps[idx] == 0 {
                return 0.0;
            }
            acc *= f64::from(exps[idx]);
            exps[idx] -= 1;
        }
        exps.iter().zip(z).fold(acc, |a, (&e, &x)| a * pow(x, e))
    }
}

#[inline]
fn pow(x: f64, e: u32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

/// Polynomial `f: R^n -> R` given as a sum of monomials.
///
/// Duplicate monomials are allowed and simply add up. An empty term list is
/// the zero function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFunction {
    dimension: usize,
    terms: Vec<Term>,
}

impl PolyFunction {
    pub fn new(dimension: usize, terms: Vec<Term>) -> Result<Self, ModelError> {
        if dimension == 0 {
            return Err(ModelError::ZeroDimension);
        }
        for (idx, t) in terms.iter().enumerate() {
            if t.exponents.len() != dimension {
                return Err(ModelError::TermArity {
                    term: idx,
                    expected: dimension,
                    found: t.exponents.len(),
                });
            }
        }
        Ok(Self { dimension, terms })
    }

    pub fn zero(dimension: usize) -> Self {
        Self {
            dimension,
            terms: Vec::new(),
        }
    }

    /// Convenience constructor from `(coef, exponents)` pairs. Panics on arity
    /// mismatch; meant for hard-coded problems.
    pub fn from_terms(dimension: usize, terms: &[(f64, &[u32])]) -> Self {
        let terms = terms
            .iter()
            .map(|(c, e)| Term::new(*c, e.to_vec()))
            .collect();
        Self::new(dimension, terms).expect("term arity must match dimension")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn check(&self, z: &[f64]) -> Result<(), ModelError> {
        if z.len() != self.dimension {
            return Err(ModelError::DimensionMismatch {
                expected: self.dimension,
                found: z.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64, ModelError> {
        self.check(z)?;
        Ok(self.terms.iter().map(|t| t.value(z)).sum())
    }

    pub fn gradient(&self, z: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check(z)?;
        let mut g = vec![0.0; self.dimension];
        for t in &self.terms {
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += t.partial(z, j);
            }
        }
        Ok(g)
    }

    /// Hessian; only the upper triangle is computed and then mirrored, so the
    /// result is exactly symmetric.
    pub fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>, ModelError> {
        self.check(z)?;
        let n = self.dimension;
        let mut h = DMatrix::zeros(n, n);
        self.add_hessian_to(z, 1.0, &mut h);
        Ok(h)
    }

    /// `h += scale * hess f(z)`, keeping `h` symmetric.
    pub(crate) fn add_hessian_to(&self, z: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        let n = self.dimension;
        for t in &self.terms {
            for j in 0..n {
                for l in j..n {
                    let v = scale * t.second_partial(z, j, l);
                    if v != 0.0 {
                        h[(j, l)] += v;
                        if l != j {
                            h[(l, j)] += v;
                        }
                    }
                }
            }
        }
    }
}
