use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// A value is outside the domain the operation accepts.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The experiment description is inconsistent (CP sizing, divisibility, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The channel delay spread exceeds the cyclic prefix.
    #[error("CP underrun: cyclic prefix of {cp_len} samples cannot absorb {taps} taps with delay {delay}")]
    CpUnderrun { cp_len: usize, taps: usize, delay: usize },

    /// A model precondition (e.g. reciprocity) does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A dispersion set failed one of its design rules.
    #[error("dispersion set validation failed: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors that stem from the experiment description rather than
    /// from running it.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Json { .. } | Error::Validation(_) | Error::Argument(_) | Error::CpUnderrun { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
