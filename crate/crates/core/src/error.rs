use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid is {width}x{height}, operation needs at least {min}x{min}")]
    GridTooSmall { width: usize, height: usize, min: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("{clusters} clusters requested but data has only {distinct} distinct values")]
    TooFewDistinctValues { clusters: usize, distinct: usize },
    #[error("cluster index {index} out of range for {clusters} clusters")]
    InvalidCluster { index: usize, clusters: usize },
    #[error("level set diverged (non-finite value) at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("no lesion region after clustering")]
    NoLesionRegion,
    #[error("labels must be 0 or 1 for this objective (found {0})")]
    NonBinaryLabel(f64),
    #[error("invalid feature record: {0}")]
    InvalidRecord(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
