//! Built-in degenerate test problems, the text problem format, and
//! ground-truth oracles for distance to the solution set.

mod format;
mod oracle;

pub use format::{parse_problem, serialize_problem};
pub use oracle::{distance_to_solution, epsilon_lambda};

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::ProblemError;
use crate::index_set::IndexSet;
use crate::model::{GroundTruth, Problem};
use crate::poly::PolyFunction;

/// Names accepted by [`get_problem`], in registry order.
pub const REGISTRY: [&str; 5] = ["weak1", "dep1", "degen-full", "nondeg", "parab"];

/// Returns a registry problem with its ground truth attached.
///
/// | name | data | notes |
/// |------|------|-------|
/// | `weak1` | `min z^2 s.t. z <= 0` | constraint weakly active |
/// | `dep1` | `min z^2/2 - z s.t. z <= 0, 2z <= 0` | dependent active gradients, segment of multipliers |
/// | `degen-full` | `min (z1^2+z2^2)/2 - z1 s.t. z1 <= 0, 2 z1 <= 0, z2 <= 0` | both degeneracies |
/// | `nondeg` | `min z1^2+z2^2 s.t. 1 - z1 - z2 <= 0` | LICQ and strict complementarity |
/// | `parab` | `min z1^2 + (z2-1)^2 s.t. z2 - z1^2 <= 0` | curved constraint |
pub fn get_problem(name: &str) -> Result<Problem, ProblemError> {
    let p = match name {
        "weak1" => Problem::new(
            name,
            PolyFunction::from_terms(1, &[(1.0, &[2])]),
            vec![PolyFunction::from_terms(1, &[(1.0, &[1])])],
            Some(GroundTruth {
                z_star: vec![0.0],
                slam_vertices: vec![vec![0.0]],
                b_plus: IndexSet::new(),
                b_zero: IndexSet::from_one_based(&[1]),
                mfcq_certificate: None,
            }),
        ),
        "dep1" => Problem::new(
            name,
            PolyFunction::from_terms(1, &[(0.5, &[2]), (-1.0, &[1])]),
            vec![
                PolyFunction::from_terms(1, &[(1.0, &[1])]),
                PolyFunction::from_terms(1, &[(2.0, &[1])]),
            ],
            Some(GroundTruth {
                z_star: vec![0.0],
                slam_vertices: vec![vec![1.0, 0.0], vec![0.0, 0.5]],
                b_plus: IndexSet::from_one_based(&[1, 2]),
                b_zero: IndexSet::new(),
                mfcq_certificate: Some(vec![-1.0]),
            }),
        ),
        "degen-full" => Problem::new(
            name,
            PolyFunction::from_terms(2, &[(0.5, &[2, 0]), (0.5, &[0, 2]), (-1.0, &[1, 0])]),
            vec![
                PolyFunction::from_terms(2, &[(1.0, &[1, 0])]),
                PolyFunction::from_terms(2, &[(2.0, &[1, 0])]),
                PolyFunction::from_terms(2, &[(1.0, &[0, 1])]),
            ],
            Some(GroundTruth {
                z_star: vec![0.0, 0.0],
                slam_vertices: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.0]],
                b_plus: IndexSet::from_one_based(&[1, 2]),
                b_zero: IndexSet::from_one_based(&[3]),
                mfcq_certificate: Some(vec![-1.0, -1.0]),
            }),
        ),
        "nondeg" => Problem::new(
            name,
            PolyFunction::from_terms(2, &[(1.0, &[2, 0]), (1.0, &[0, 2])]),
            vec![PolyFunction::from_terms(
                2,
                &[(1.0, &[0, 0]), (-1.0, &[1, 0]), (-1.0, &[0, 1])],
            )],
            Some(GroundTruth {
                z_star: vec![0.5, 0.5],
                slam_vertices: vec![vec![1.0]],
                b_plus: IndexSet::from_one_based(&[1]),
                b_zero: IndexSet::new(),
                mfcq_certificate: None,
            }),
        ),
        "parab" => Problem::new(
            name,
            PolyFunction::from_terms(
                2,
                &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-2.0, &[0, 1]), (1.0, &[0, 0])],
            ),
            vec![PolyFunction::from_terms(2, &[(1.0, &[0, 1]), (-1.0, &[2, 0])])],
            Some(GroundTruth {
                z_star: vec![FRAC_1_SQRT_2, 0.5],
                slam_vertices: vec![vec![1.0]],
                b_plus: IndexSet::from_one_based(&[1]),
                b_zero: IndexSet::new(),
                mfcq_certificate: None,
            }),
        ),
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    Ok(p?)
}
