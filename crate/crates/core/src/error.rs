use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point has a non-finite coordinate")]
    NonFinite,

    #[error("invalid convex set: {0}")]
    InvalidSet(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid stepsize schedule: {0}")]
    InvalidSchedule(String),

    /// The schedule does not satisfy the non-summable diminishing conditions.
    #[error("schedule violates {0} condition")]
    ScheduleRejected(&'static str),

    #[error("Dykstra projection did not converge within {iterations} cycles (intersection is likely empty)")]
    DykstraNoConvergence { iterations: usize },

    #[error("region must be bounded")]
    UnboundedRegion,

    #[error("could not draw a sample inside the region after {attempts} attempts")]
    SamplingFailed { attempts: usize },

    #[error("point lies outside the feasible set (violation {violation:e})")]
    OutsideSet { violation: f64 },

    #[error("missing constant: {0}")]
    MissingConstant(&'static str),

    /// `F(x)` is not representable in `f64`; the sign is the sign of the true value.
    #[error("operator value overflowed ({})", if *.positive { "+" } else { "-" })]
    OperatorOverflow { positive: bool },

    #[error("reference solution has natural-map residual {residual:e}")]
    InvalidReference { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("oracle failed: {0}")]
    OracleFailed(String),

    /// The error trace reached exactly zero, so a log-log fit is undefined.
    #[error("iterates reached the reference solution exactly at k = {k}")]
    ConvergedExactly { k: usize },
}
