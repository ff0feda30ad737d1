use thiserror::Error;

/// Errors raised by the statistics, correction and table layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("structural zero in null vector at cell {index}")]
    StructuralZero { index: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("power divergence is undefined at lambda = -1")]
    InvalidLambda,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("count vector has no nonzero cell")]
    EmptyCounts,

    #[error("nonzero counts are uniform; the correction bounds are undefined")]
    UniformCounts,

    #[error("sample size {0} is too small for the correction bounds")]
    SampleTooSmall(u64),

    #[error("parameters do not match the count vector: {0}")]
    InconsistentParams(String),

    #[error("corrected estimator has a nonpositive entry at cell {index}")]
    NonPositiveEstimate { index: usize },

    #[error("instance too large for exhaustive enumeration (n = {n}, R = {categories})")]
    TooLargeForEnumeration { n: u64, categories: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("table degenerates to {rows}x{cols} after removing empty margins")]
    DegenerateTable { rows: usize, cols: usize },

    #[error("unknown distribution {0:?}")]
    UnknownDistribution(String),

    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),

    #[error("{axis} {index} is empty; remove empty margins before fitting")]
    EmptyMargin { axis: &'static str, index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
