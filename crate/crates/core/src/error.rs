use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point is not strictly feasible: g(v) = {value}")]
    NotStrictlyFeasible { value: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("constraint pairs contain a cycle")]
    CyclicPairs,

    #[error("projection did not converge after {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("non-finite descriptor entry at index {index}")]
    NonFiniteDescriptor { index: usize },

    #[error("{0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
