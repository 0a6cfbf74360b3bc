use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration (bad image size, bad depth range, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the domain of a geometric operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The evaluation produced no usable output (empty masks, all-invalid inputs).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

/// Coarse classification of an [`Error`], used by the command-line front end to
/// pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Json(_) => ErrorKind::Config,
            Error::Io(_) | Error::Format(_) | Error::Image(_) => ErrorKind::Io,
            Error::Domain(_) | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
