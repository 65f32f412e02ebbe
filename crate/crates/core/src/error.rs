//! Error type shared by all modules.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain where the model is defined.
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// Phase map and signal template were built on different region grids.
    #[error("{op}: phase map and signal template use different region grids")]
    MismatchedGrid { op: &'static str },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    /// Name of the operation that rejected its input, if any.
    pub fn operation(&self) -> Option<&'static str> {
        match self {
            Error::Domain { op, .. } | Error::MismatchedGrid { op } => Some(op),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reject anything that is not a finite, strictly positive number.
pub(crate) fn require_positive(op: &'static str, name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(
            op,
            format!("{name} must be finite and positive, got {value}"),
        ))
    }
}

pub(crate) fn require_finite(op: &'static str, name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(op, format!("{name} must be finite, got {value}")))
    }
}
