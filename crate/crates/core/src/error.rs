use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the unit square [-1/2, 1/2]^2")]
    OutsideSquare { x: f64, y: f64 },

    #[error("instance size {n} outside supported range {min}..={max} for {solver}")]
    SizeOutOfRange {
        solver: &'static str,
        n: usize,
        min: usize,
        max: usize,
    },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error(
        "geometric moment series for p = {p}, alpha = {alpha} did not reach tolerance after \
         {terms} terms (residual bound {residual})"
    )]
    SeriesNotConverged {
        p: f64,
        alpha: f64,
        terms: usize,
        partial_sum: f64,
        residual: f64,
    },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the environment rather than by the input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
