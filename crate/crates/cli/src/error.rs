use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{op} failed: {message}")]
    Domain { op: String, message: String },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// Process exit status: 2 validation, 3 domain, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Domain { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    /// Reject a module precondition while checking the configuration.
    pub fn field(path: &str, e: vacuumprobe::Error) -> Self {
        CliError::Validation(format!("{path}: {e}"))
    }
}

impl From<vacuumprobe::Error> for CliError {
    fn from(e: vacuumprobe::Error) -> Self {
        match e {
            vacuumprobe::Error::Io { path, source } => CliError::Io {
                path,
                message: source.to_string(),
            },
            vacuumprobe::Error::Format { path, message } => CliError::Io { path, message },
            vacuumprobe::Error::Domain { op, reason } => CliError::Domain {
                op: op.to_string(),
                message: reason,
            },
            other => CliError::Domain {
                op: other.operation().unwrap_or("run").to_string(),
                message: other.to_string(),
            },
        }
    }
}

/// Attach a field path to a failed module constructor.
pub trait AtField<T> {
    fn at(self, path: &str) -> Result<T, CliError>;
}

impl<T> AtField<T> for vacuumprobe::Result<T> {
    fn at(self, path: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::field(path, e))
    }
}
