//! Crate-wide error type.
//!
//! Failure classes are kept coarse on purpose: callers branch on the class
//! (contract misuse vs bad configuration vs numeric divergence), not on the
//! message.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An API precondition was violated (shape mismatch, wrong action count,
    /// operating on a failed robot, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Inconsistent or out-of-range configuration (bad zone layout, tau
    /// outside (0,1], checkpoint/config width mismatch, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Training produced non-finite values.
    #[error("training divergence: {0}")]
    Divergence(String),

    /// Scenario generation could not find a feasible placement.
    #[error("generation error: {0}")]
    Generation(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Persisted file has an unexpected layout or version.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn divergence(msg: impl Into<String>) -> Self {
        Error::Divergence(msg.into())
    }

    pub fn generation(msg: impl Into<String>) -> Self {
        Error::Generation(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Stable machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Config(_) => "config",
            Error::Divergence(_) => "divergence",
            Error::Generation(_) => "generation",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
