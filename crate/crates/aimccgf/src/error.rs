//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the model, solvers, simulators and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested problem exceeds the configured size cap.
    #[error("resource limit: {0}")]
    Resource(String),
    /// An iterative solver stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    /// A linear system could not be solved to the requested accuracy.
    #[error("numerical failure: {message} (condition number {condition:e})")]
    Numerical { message: String, condition: f64 },
    /// An object was used before it reached the required state.
    #[error("invalid state: {0}")]
    State(String),
    /// Sampling produced too little data to form an estimate.
    #[error("statistical failure: {0}")]
    Statistical(String),
    /// Two objects that must share a register size do not.
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
}

/// Shorthand result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(message: impl Into<String>) -> Error {
    Error::Domain(message.into())
}
