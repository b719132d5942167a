use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid seed set: {0}")]
    InvalidSeeds(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is singular or ill-conditioned (condition number {condition:e}); use lambda > 0")]
    Singular { condition: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last relative change {last_change:e})")]
    PowerIteration { iterations: usize, last_change: f64 },

    #[error("zero-norm input: {0}")]
    ZeroNorm(&'static str),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
