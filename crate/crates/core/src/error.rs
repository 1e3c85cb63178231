use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range [1, {n}]")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("enumeration limit exceeded: {what} is {requested}, cap is {cap}")]
    EnumerationLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("no distance up to {cap} brings the max-influence down to {eps}")]
    DistanceNotFound { eps: f64, cap: usize },

    #[error("budget split ({eps_left}, {eps_right}) exceeds total budget {eps}")]
    Budget {
        eps: f64,
        eps_left: f64,
        eps_right: f64,
    },

    #[error("no feasible grid point: {0}")]
    Infeasible(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors raised by an enumeration or search cap.
    pub fn is_limit(&self) -> bool {
        matches!(
            self,
            Error::EnumerationLimit { .. } | Error::DistanceNotFound { .. }
        )
    }
}
