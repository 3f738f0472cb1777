use std::path::PathBuf;

/// Errors raised by the decomposition pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix contains a non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("power iteration did not converge after {sweeps} sweeps (subspace change {change:.3e})")]
    NoConvergence { sweeps: usize, change: f64 },

    #[error("requested {requested} singular directions but numerical rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("warp is not invertible (determinant {0:.3e})")]
    NonInvertibleWarp(f64),

    #[error("three-sigma thresholding needs at least one background sample (S = 0)")]
    NoBackgroundSample,

    #[error("no frames matched {0}")]
    EmptySequence(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
