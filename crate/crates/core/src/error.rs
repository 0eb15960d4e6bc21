//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors produced by the facies classification pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor or layer shapes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A NaN or infinite value reached an operation that rejects it.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid hyper-parameter, model spec or run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Several configuration problems collected in one pass.
    #[error("{} config error(s):\n  {}", .0.len(), .0.join("\n  "))]
    ConfigList(Vec<String>),

    /// Structurally malformed input document (CSV header, checkpoint, ...).
    #[error("format error: {0}")]
    Format(String),

    /// A required CSV column is absent from the header.
    #[error("format error: missing required column `{0}`")]
    MissingColumn(String),

    /// A cell could not be parsed; `row` is the 1-based line number.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// Data and model disagree (channels, window length, class count).
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// An operation needs facies labels that the data does not carry.
    #[error("missing labels: {0}")]
    MissingLabels(String),

    #[error("i/o error on {path}: {source}")]
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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
