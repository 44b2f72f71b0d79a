use std::io;

use thiserror::Error;

/// Errors raised anywhere in the library. Display gives the message alone;
/// the CLI prefixes it with [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Empty(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Format(String),

    #[error("{0}")]
    DimensionMismatch(String),

    #[error("{0}")]
    NonFinite(String),

    #[error("{0}")]
    Synthesis(String),

    #[error("{0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Empty(_) => "empty",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Format(_) => "format",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::Synthesis(_) => "synthesis",
            Error::Config(_) => "config",
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
