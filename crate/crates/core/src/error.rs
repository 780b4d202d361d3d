use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid filter parameters: {0}")]
    InvalidSpec(String),

    #[error("X'WX is numerically singular (condition estimate {condition:.3e}); try a smaller n")]
    IllConditioned { condition: f64 },

    #[error("series too short: {len} samples, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("noise estimate is already unbiased; refusing to apply the degrees-of-freedom correction twice")]
    AlreadyUnbiased,

    #[error("confidence bands require an unbiased noise estimate (apply the (2m+1)/(2m+1-n) correction first)")]
    BiasedEstimate,

    #[error("sweep needs max half-window p <= {max_feasible} for a series of {len} samples (got p = {requested})")]
    SweepRange { requested: usize, max_feasible: usize, len: usize },

    #[error("no noise plateau found: no run of {min_run} or more m values with relative change below {threshold}; inspect the sweep manually")]
    NoPlateau { threshold: f64, min_run: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("polynomial fit of degree {degree} is ill-conditioned (normal-equation residual {residual:.3e})")]
    IllConditionedFit { degree: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
