use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("feature column {column} has zero variance")]
    DegenerateFeature { column: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("training diverged: non-finite cost or gradient at iteration {iteration}")]
    DivergedTraining { iteration: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing or malformed header (expected `{expected}`)")]
    MissingHeader { expected: String },

    #[error("bad row at line {line}: {reason}")]
    BadRow { line: u64, reason: String },

    #[error("unknown label at line {line}")]
    UnknownLabel { line: u64 },

    #[error("bad magic: expected `MFNET <version>`")]
    BadMagic,

    #[error("unsupported model format version {0}")]
    VersionUnsupported(u32),

    #[error("ShapeMismatch: {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::DivergedTraining { .. })
    }
}
