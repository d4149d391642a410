use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window exceeds record: window of {window} samples, record has {samples}")]
    WindowExceedsRecord { window: usize, samples: usize },

    #[error("signal too short for the wavelet transform: need at least {min_len} samples, got {len}")]
    SignalTooShort { len: usize, min_len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in tensor `{tensor}`")]
    NonFinite { tensor: String },

    #[error("{0}")]
    Degenerate(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("training failed at epoch {epoch}: {source}")]
    Training {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
