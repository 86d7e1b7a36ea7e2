use sal_distribution::DistributionError;
use special_functions::SpecialFunctionError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset: {0}")]
    InvalidData(String),
    #[error("cannot form {g} nonempty clusters from {distinct} distinct points")]
    TooFewDistinctPoints { g: usize, distinct: usize },
    #[error("row {row} has zero density under every component")]
    DegenerateRow { row: usize },
    #[error("component {component}: location/skewness system is singular")]
    SingularLocationSystem { component: usize },
    #[error("component {component}: parameter update failed: {reason}")]
    DegenerateComponent { component: usize, reason: String },
    #[error("log-likelihood decreased by {drop:e} at iteration {iteration}")]
    MonotonicityViolation { iteration: usize, drop: f64 },
    #[error("every start failed; last error: {0}")]
    AllStartsFailed(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
}
