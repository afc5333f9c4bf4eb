use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the solver stack and the harness.
#[derive(Debug, Error)]
pub enum SaddleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("problem has no unique solution: {0}")]
    NoUniqueSolution(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("subspace system is singular after {doublings} regularization doublings")]
    SingularSubspace { doublings: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SaddleError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SaddleError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, SaddleError>;
