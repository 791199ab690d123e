use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero-length vector passed to {0}")]
    ZeroVector(&'static str),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("unsupported dtype `{0}`")]
    UnsupportedDtype(String),

    #[error("truncated file: need {needed} bytes, have {available}")]
    Truncated { needed: u64, available: u64 },

    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(u64),

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("key `{0}` not found")]
    KeyNotFound(String),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("steering diverged: non-finite value at step {step} (channel {channel})")]
    NanSteer { step: usize, channel: usize },

    #[error("channel {channel}: {source}")]
    Channel {
        channel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimMismatch {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn in_channel(self, channel: usize) -> Self {
        Error::Channel {
            channel,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::dims(context, expected, actual))
    }
}
