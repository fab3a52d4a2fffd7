use thiserror::Error;

/// Errors produced by maskgrid operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not an isometry (max |V†V - I| = {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error("block count mismatch: dimension {n} needs {expected} qubit maskers, got {got}")]
    BlockCountMismatch {
        n: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid angles: {0}")]
    InvalidAngles(String),

    #[error("state is not normalized (|norm^2 - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("index {index} out of range for codebook of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("state lies outside the masker range (projection residual {residual:.3e})")]
    OutOfRange { residual: f64 },

    #[error(
        "constraint sampling failed: {accepted} of {requested} states after {attempts} attempts"
    )]
    SamplingFailed {
        accepted: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("state family is not masked (residual {residual:.3e})")]
    NotMasked { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
