use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad magic bytes {0:?}, expected \"VEMB\"")]
    BadMagic([u8; 4]),

    #[error("unsupported VEMB version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("sample indexes not strictly increasing at position {position}: {prev} then {next}")]
    NonIncreasingIndex { position: usize, prev: u64, next: u64 },

    #[error("index {index} out of range [1, {max}] ({context})")]
    IndexOutOfRange { index: u64, max: u64, context: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("length mismatch: expected {expected}, got {got} ({context})")]
    LengthMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid reducer chain: {0}")]
    InvalidChain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid answer for question {question}: {reason}")]
    InvalidAnswer { question: String, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the underlying byte source or sink rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
