use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected_h}x{expected_w}, got {got_h}x{got_w}")]
    ShapeMismatch {
        expected_h: usize,
        expected_w: usize,
        got_h: usize,
        got_w: usize,
    },

    #[error("image has empty support: no admissible mask exists")]
    EmptySupport,

    #[error("label {label} out of range for {num_classes} classes")]
    InvalidLabel { label: usize, num_classes: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite {what} at outer iteration {outer_iter}, inner step {inner_step}")]
    NonFinite {
        what: &'static str,
        outer_iter: usize,
        inner_step: usize,
    },

    #[error("architecture mismatch: {0}")]
    ArchMismatch(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} has zero norm")]
    ZeroNorm { what: &'static str },

    #[error("degenerate polyline: zero arc length")]
    DegeneratePolyline,

    #[error("invalid branch trace: {0}")]
    InvalidTrace(String),

    #[error("grid produces no graph edges")]
    EmptyGraph,

    #[error("malformed {format} file {path}: {msg}")]
    Format {
        format: &'static str,
        path: PathBuf,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
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

    pub(crate) fn format(
        format: &'static str,
        path: impl Into<PathBuf>,
        msg: impl Into<String>,
    ) -> Self {
        Error::Format {
            format,
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
