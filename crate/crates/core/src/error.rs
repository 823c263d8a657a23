use thiserror::Error;

/// Errors produced by the estimation and risk routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    EigenNonConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

pub type Result<T> = std::result::Result<T, Error>;
