use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by vdmkit operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    IoAt {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed array file: {0}")]
    Format(String),

    #[error("unsupported array layout: {0}")]
    UnsupportedLayout(String),

    #[error("non-finite value in row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:e} below tolerance {tolerance:e})")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("negative covariance term {cov_term:e} exceeds the clamp threshold {threshold:e}")]
    NegativeCovTerm { cov_term: f64, threshold: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate mixture fit: {0}")]
    DegenerateFit(String),

    #[error("infeasible transport problem: {0}")]
    Infeasible(String),

    #[error("training diverged after epoch {epoch}; last finite loss {last_finite_loss:e}")]
    Diverged { epoch: usize, last_finite_loss: f64 },

    #[error("metric failed at n={n}, repeat {repeat}: {source}")]
    Protocol {
        n: usize,
        repeat: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
