use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parallel files are misaligned: source has {source_lines} lines, target has {target_lines}")]
    Alignment {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate centroid for domain `{0}`: embeddings sum to the zero vector")]
    DegenerateCentroid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index was built with embedder `{index}` but `{embedder}` was supplied")]
    EmbedderMismatch { index: String, embedder: String },

    #[error("invalid index file: {0}")]
    Format(String),

    #[error("classifier failed: {0}")]
    Classifier(String),

    #[error("embedder failed: {0}")]
    Embedder(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Alignment { .. } => "alignment",
            Error::Parse { .. } => "parse",
            Error::Config(_) | Error::EmbedderMismatch { .. } => "config",
            Error::Validation(_) | Error::DimensionMismatch { .. } => "validation",
            Error::Degenerate(_) | Error::DegenerateCentroid(_) => "degenerate",
            Error::Format(_) => "format",
            Error::Classifier(_) => "classifier",
            Error::Embedder(_) => "embedder",
        }
    }
}
