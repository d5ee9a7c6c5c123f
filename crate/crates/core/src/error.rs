use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("step {step}: column fill has {found} bits, expected {expected}")]
    FillLengthMismatch {
        step: usize,
        expected: usize,
        found: usize,
    },

    #[error("step {step}: column fill is all zeros (every column needs a 1)")]
    AllZeroFill { step: usize },

    #[error("malformed shape: {0}")]
    MalformedShape(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("{what} = {requested} exceeds the configured maximum {max}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        max: usize,
    },

    #[error("index k = {k} out of range for n = {n}")]
    IndexOutOfRange { k: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("chain is not ergodic (alpha and beta must both be positive)")]
    NotErgodic,

    #[error("stationary solver failed: {0}")]
    SolverFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_cap(what: &'static str, requested: usize, max: usize) -> Result<()> {
    if requested > max {
        return Err(Error::ResourceCap {
            what,
            requested,
            max,
        });
    }
    Ok(())
}
