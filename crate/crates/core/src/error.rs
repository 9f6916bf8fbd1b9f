use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("primal dimension must be at least 1")]
    ZeroDimension,
    #[error("term {term} has {found} exponents, expected {expected}")]
    TermArity {
        term: usize,
        expected: usize,
        found: usize,
    },
    #[error("constraint {index} has dimension {found}, expected {expected}")]
    ConstraintDimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("multiplier {index} is negative ({value})")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("problem has no ground-truth metadata")]
    MetadataAbsent,
    #[error("multiplier set with {0} vertices is unsupported (at most 2)")]
    UnsupportedVertexCount(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("numerical breakdown: no pivot above {threshold:e}")]
    NumericalBreakdown { threshold: f64 },
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdError {
    #[error("require 0 < tau_hat < tau < 1, got tau={tau}, tau_hat={tau_hat}")]
    InvalidParams { tau: f64, tau_hat: f64 },
    #[error("tau must lie in (0, 1), got {0}")]
    InvalidTau(f64),
    #[error("identification LP infeasible: point too far from the solution set")]
    TooFarFromSolution,
    #[error("identification LP unbounded: multiplier set not bounded near this point")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("stabilization parameter must be non-negative, got {0}")]
    NegativeMu(f64),
    #[error("linearized constraints are inconsistent")]
    InfeasibleLinearization,
    #[error("active-set iteration cap {0} exceeded")]
    IterationCap(usize),
    #[error("no Hessian shift up to {0:e} makes the Hessian positive definite")]
    ShiftExhausted(f64),
    #[error("singular working-set system")]
    Singular,
    #[error("subproblem residual {0:e} above tolerance")]
    Inaccurate(f64),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("too few usable iterations for a convergence-order estimate ({0})")]
    TooFewIterations(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}
