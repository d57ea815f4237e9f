use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed tensor file {file}: {reason}")]
    Format { file: PathBuf, reason: String },

    #[error("missing file for field `{field}`: {path}")]
    MissingFile { field: String, path: PathBuf },

    #[error("dim mismatch in {file} (field `{field}`): expected {expected}, found {found}")]
    DimMismatch {
        file: PathBuf,
        field: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {file} (field `{field}`) at element {index}")]
    NonFinite {
        file: PathBuf,
        field: String,
        index: usize,
    },

    #[error("invalid manifest {file}: {reason}")]
    Manifest { file: PathBuf, reason: String },

    #[error("degenerate channel {channel}: zero variance")]
    DegenerateChannel { channel: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular matrix: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
