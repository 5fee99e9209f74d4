use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input refers to vertices or sets outside the valid domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric or structural parameter is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Exhaustive routines refuse inputs above their size cap.
    #[error("size error: {0}")]
    Size(String),
    /// A subproblem has no feasible solution under the given constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A certificate produced upstream does not hold.
    #[error("certificate violation: {0}")]
    Certificate(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
