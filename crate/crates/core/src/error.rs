use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad analysis configuration, salary table or weight rules.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its domain (empty cell, too few entries, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent data discovered while computing indicators.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("input validation failed with {} error(s)", .0.errors.len())]
    Invalid(Box<ValidationReport>),

    #[error("malformed {what}: {message}")]
    Parse { what: String, message: String },

    #[error("I/O error on {}: {source}", path.display())]
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

    pub(crate) fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }
}
