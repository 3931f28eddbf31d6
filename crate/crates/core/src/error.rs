use thiserror::Error;

use crate::approx::TraceEntry;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A declared structural property was contradicted at run time.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unbounded below: {0}")]
    UnboundedBelow(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("no convergence within {steps} steps")]
    NonConvergence { steps: usize, trace: Vec<TraceEntry> },

    #[error("scenario file, row {row}, column {column}: {message}")]
    Scenario {
        row: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
