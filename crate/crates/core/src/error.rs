use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid generator, experiment, or agent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An instance or scenario file could not be ingested.
    #[error("load error at {location}: {message}")]
    Load { location: String, message: String },

    /// An operation was called outside its contract (wrong sizes, terminal env, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn load(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
