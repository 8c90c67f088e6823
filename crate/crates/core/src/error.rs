use thiserror::Error;

/// Errors surfaced by the engine's fallible operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A document, stream line or API response that could not be decoded.
    /// `context` names the offending location (file:line, field, url).
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    /// Network failure after bounded retries; carries the last HTTP status
    /// when one was observed.
    #[error("transport error (last status {status:?}): {message}")]
    Transport { status: Option<u16>, message: String },

    #[error("unknown page {0}")]
    UnknownPage(u64),

    #[error("unknown news item {0}")]
    UnknownNewsItem(u64),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("storage error: {0}")]
    Storage(String),

    /// Page-view provider failure after retries. The pipeline degrades to
    /// zero stats instead of aborting.
    #[error("stats provider error: {0}")]
    Provider(String),

    /// No edit text survived selection and cleanup for a page; no news item
    /// can be produced from nothing.
    #[error("empty aggregate: no edit text to summarize")]
    EmptyAggregate,
}

impl Error {
    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
