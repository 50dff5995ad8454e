use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum RraeError {
    #[error("dimension mismatch in {op}: left is {left}, right is {right}")]
    DimMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed header in {path}: {detail}")]
    MalformedHeader { path: String, detail: String },

    #[error("feature streams disagree on dimension: {first} vs {second}")]
    StreamDimMismatch { first: usize, second: usize },

    #[error("truncated payload in {path}: {detail}")]
    TruncatedPayload { path: String, detail: String },

    #[error("malformed data in {path}: {detail}")]
    MalformedData { path: String, detail: String },

    #[error("dataset has no labels: {0}")]
    Unlabeled(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad flags, bad config files, invalid parameter combinations.
    Usage,
    /// Unreadable, malformed, or inconsistent input data.
    Data,
    /// Training or evaluation diverged into non-finite territory.
    Numeric,
}

impl RraeError {
    pub fn class(&self) -> ErrorClass {
        match self {
            RraeError::Config(_) => ErrorClass::Usage,
            RraeError::NonFiniteLoss { .. } | RraeError::Numeric(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        RraeError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, RraeError>;
