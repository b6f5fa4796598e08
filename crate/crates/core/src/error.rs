use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition or type invariant.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A requested matrix would exceed the configured size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A numerical routine failed to converge.
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
