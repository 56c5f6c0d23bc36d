use thiserror::Error;

use crate::implicit_solver::Method;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("point is not strictly increasing: gap {index} is {gap}")]
    NotOrdered { index: usize, gap: f64 },

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: Method,
        iterations: usize,
        residual: f64,
    },

    /// The input lacks the structure an operation is stated for.
    #[error("expected {expected}")]
    StructureMismatch { expected: &'static str },

    /// A monotonicity property guaranteed for an iteration failed beyond rounding.
    #[error("{method}: {detail}")]
    OrderViolation { method: Method, detail: String },

    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// `true` when the error (or the one wrapped by a replication) is a solver failure.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::OrderViolation { .. } => true,
            Error::Replication { source, .. } => source.is_non_convergence(),
            _ => false,
        }
    }
}
