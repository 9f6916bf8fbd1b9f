//! Weak/strong active-constraint identification for degenerate nonlinear
//! programs and a stabilized SQP method that uses it to adjust multipliers.
//!
//! The pieces, bottom up:
//!
//! - [`poly`] and [`model`]: polynomial problem data, derivatives, and the
//!   KKT residual `eta`.
//! - [`problems`]: built-in degenerate test problems, a text format, and
//!   distance-to-solution oracles.
//! - [`lp`]: dense bounded-variable simplex with warm starts.
//! - [`active_id`]: active-set estimate, the LP-based weak/strong split, and
//!   the interior multiplier estimate.
//! - [`subproblem`]: the stabilized SQP subproblem.
//! - [`driver`]: the outer iteration with multiplier adjustment, baselines,
//!   and convergence-order diagnostics.
//! - [`sampling`]: seeded perturbed starting points.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_id;
pub mod driver;
pub mod error;
pub mod index_set;
pub mod lp;
pub mod model;
pub mod poly;
pub mod problems;
pub mod sampling;
pub mod subproblem;

pub use error::{DriverError, IdError, LpError, ModelError, ProblemError, SubproblemError};
pub use index_set::IndexSet;
pub use model::{EtaReport, GroundTruth, Iterate, Problem};
pub use poly::{PolyFunction, Term};
