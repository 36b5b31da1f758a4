use thiserror::Error;

/// Everything that can go wrong while configuring or advancing a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {key}: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("elliptic solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("time step {dt:e} exceeds the admissible step {admissible:e}")]
    CflViolation { dt: f64, admissible: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("scheme invariant broken: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            reason: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
