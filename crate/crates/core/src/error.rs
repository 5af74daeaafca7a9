use std::path::PathBuf;

use thiserror::Error;

use crate::config::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("invalid configuration:\n{0}")]
    Invalid(ValidationReport),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("IPF infeasible: {0}")]
    Infeasible(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("perfect separation detected: {0}")]
    Separation(String),

    #[error("{0}")]
    Analysis(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(what: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse { what: what.into(), message: message.to_string() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
