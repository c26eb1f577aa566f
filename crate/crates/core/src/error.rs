use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operators live on different grids")]
    GridMismatch,

    /// The grid cannot resolve a kernel of width ~ hbar * decay radius.
    #[error(
        "grid spacing {spacing} exceeds {limit} (hbar * decay_radius / 8); \
         finest admissible hbar for this grid is {finest_hbar}"
    )]
    Resolution { spacing: f64, limit: f64, finest_hbar: f64 },

    #[error("quadrature spacing {spacing} too coarse for decay radius; need spacing <= {required}")]
    QuadratureResolution { spacing: f64, required: f64 },

    #[error("quadrature spacing {spacing} violates Nyquist bound; need spacing <= {required}")]
    Nyquist { spacing: f64, required: f64 },

    #[error("quadrature box radius {radius} does not cover decay radius {required}")]
    Truncation { radius: f64, required: f64 },

    #[error("power iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("catalogue id `{id}`: {reason}")]
    Catalogue { id: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed matrix dump: {0}")]
    Dump(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Configuration problems map to a distinct CLI exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Catalogue { .. })
    }
}
