//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors produced by alignment, metrics, and I/O operations.
#[derive(Debug, thiserror::Error)]
pub enum NtwError {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The optimization produced a non-finite loss or parameter.
    #[error("numerical divergence at update {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// An internal contract was violated (e.g. a missing tape entry).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A parse failure in an input file, with 1-based line and field position.
    #[error("parse error in {path} at line {line}, field {field}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: usize,
        detail: String,
    },

    /// Two inputs that must agree in shape did not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl NtwError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NtwError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, NtwError>;
