use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input bytes did not match the expected file format.
    #[error("format error: {0}")]
    Format(String),

    /// A document parsed but violates a structural invariant.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Failure while producing or reading one benchmark group.
    #[error("group {group_id} ({name}): {source}")]
    Group {
        group_id: u32,
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("version mismatch: expected {expected}, found {found}")]
    Version { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }
}
