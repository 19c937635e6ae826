use thiserror::Error;

/// Errors produced by dataset handling, coreset construction and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate observation for individual {individual}, time {time}")]
    DuplicateKey {
        line: u64,
        individual: i64,
        time: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} pairs but only {available} are observed")]
    InvalidSize { requested: usize, available: usize },

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("no data to fit")]
    NoData,

    #[error("lower-bound instance supports 1..=15 individuals, got {0}")]
    Overflow(usize),

    #[error("sensitivity map was computed for a different dataset")]
    FingerprintMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input (as opposed to I/O or numerical failures).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DuplicateKey { .. }
                | Error::NonFinite(_)
                | Error::Shape(_)
                | Error::InvalidParameter(_)
                | Error::InvalidSize { .. }
                | Error::Overflow(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
