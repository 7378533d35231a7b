use thiserror::Error;

/// Errors produced by the coders, parameterizations and serialization.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("region has zero mass under the proposal")]
    DegenerateRegion,
    #[error("target is not absolutely continuous w.r.t. the proposal")]
    AbsoluteContinuity,
    #[error("density ratio is unbounded (D_inf = inf)")]
    UnboundedRatio,
    #[error("no closed form available for this pair of families")]
    Unsupported,
    #[error("heap index overflow: depth {0} exceeds the supported maximum")]
    DepthExceeded(u32),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("search budget of {0} steps exhausted")]
    BudgetExhausted(u64),
    #[error("all importance weights are zero")]
    DegenerateTarget,
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
