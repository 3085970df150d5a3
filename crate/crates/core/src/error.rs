use std::path::{Path, PathBuf};

use crate::corruption::ArtifactFlags;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent shapes, bad hyperparameters, malformed config files.
    #[error("configuration error: {0}")]
    Config(String),

    /// Data that violates an operation's precondition (lengths, silence, ranges).
    #[error("input error: {0}")]
    Input(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },

    /// Weight redraws never landed in the requested SDR window.
    #[error("no accepted corruption after {attempts} attempts (flags {flags})")]
    RetryExhausted { flags: ArtifactFlags, attempts: usize },

    #[error("training diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            detail: detail.into(),
        }
    }

    /// Process exit code class used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
            Error::Divergence { .. } => 4,
            Error::Input(_) | Error::RetryExhausted { .. } => 5,
        }
    }
}

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(format!($($arg)*)) };
}

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(format!($($arg)*)) };
}

pub(crate) use config_err;
pub(crate) use input_err;
