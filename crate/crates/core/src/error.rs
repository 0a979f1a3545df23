use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("negative gauge pressure {0} Pa; vacuum drive is handled by the gait controller")]
    NegativePressure(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix exponential overflow (norm {norm:.3e})")]
    Overflow { norm: f64 },

    #[error("simulation unstable at step {step}: |state| = {magnitude:.3e} exceeds {bound:.0e}")]
    Instability {
        step: usize,
        magnitude: f64,
        bound: f64,
    },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("infeasible gait schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failing run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::NegativePressure(_)
                | Error::DimensionMismatch(_)
                | Error::InfeasibleSchedule(_)
                | Error::Parse(_)
                | Error::Json(_)
        )
    }
}
