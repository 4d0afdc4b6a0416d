use std::path::PathBuf;

use crate::alphabet::Symbol;

/// Errors raised by model construction, file loading and the harnesses.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("truncation failed: tail mass {tail:.3e} still above {tail_eps:.1e} after {cap} terms")]
    Truncation { tail: f64, tail_eps: f64, cap: usize },

    #[error("log-moment bound violated for row y={row}: {value} bits^2 exceeds cap {cap}")]
    BoundViolation { row: Symbol, value: f64, cap: f64 },

    #[error("no kernel row for y={0}")]
    MissingKernelRow(Symbol),

    #[error("sequence length mismatch: {0}")]
    LengthMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed field `{field}`: {reason}")]
    Field { field: String, reason: String },

    #[error("empty results")]
    EmptyResults,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Field {
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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
