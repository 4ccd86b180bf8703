use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("problem size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("matrix is numerically singular (condition estimate {0:.3e})")]
    Singular(f64),
    #[error("series did not converge: {0}")]
    Series(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
