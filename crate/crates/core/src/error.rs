use thiserror::Error;

/// Errors raised by the simulator and the metrics engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("slot {t} outside horizon 1..={horizon}")]
    SlotOutOfRange { t: usize, horizon: usize },

    #[error("worker {index} out of range (C = {workers})")]
    UnknownWorker { index: usize, workers: usize },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e}){context}")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("not implemented for this cost family: {0}")]
    NotImplemented(&'static str),

    #[error("incomplete trace: {found} of {expected} slots recorded")]
    IncompleteTrace { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
