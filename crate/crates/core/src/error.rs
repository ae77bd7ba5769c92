use std::path::PathBuf;

/// Errors raised by the decoding engine and its file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: beam settings, chunk geometry, model dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Stream protocol violation such as out-of-order frames.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A model or feature file parsed but violates a schema invariant.
    /// `field` is a JSON-pointer-like path to the offending value.
    #[error("invalid {field}: {message}")]
    Schema { field: String, message: String },

    /// The oracle refused to run because the instance is too large.
    #[error("oracle limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
