use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported lattice dimension {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),

    #[error("half-side must be at least 1, got {0}")]
    InvalidHalfSide(usize),

    #[error("field has {got} entries, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("region does not fit inside the torus without wrapping: {0}")]
    RegionOutOfBounds(String),

    #[error("instance with {sites} sites exceeds the dense limit of {limit}")]
    Oversize { sites: usize, limit: usize },

    #[error(
        "eigensolver did not converge after {iterations} operator applications \
         (worst residual {worst_residual:e}, tolerance {tolerance:e})"
    )]
    NotConverged {
        iterations: usize,
        worst_residual: f64,
        tolerance: f64,
        /// Best residual norm reached for each requested pair.
        residuals: Vec<f64>,
    },

    #[error("config {path:?} line {line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("record stream: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
