use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis: direction norm {norm} is not unit")]
    InvalidAxis { norm: f64 },

    #[error("wrong motion kind: expected {expected:?}, got {found:?}")]
    KindMismatch {
        expected: crate::geometry::MotionKind,
        found: crate::geometry::MotionKind,
    },

    #[error("degenerate geometry: covariance rank {rank} ({points} points)")]
    DegenerateGeometry { rank: usize, points: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("frame count mismatch: {predicted} predicted vs {observed} observed")]
    FrameCount { predicted: usize, observed: usize },

    #[error("numerical failure at iteration {iteration}: {what}")]
    NumericalFailure { iteration: usize, what: String },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("template construction failed: {0}")]
    Construction(String),

    #[error("over-degraded frame {frame}: only {remaining} points left after dropout")]
    OverDegraded { frame: usize, remaining: usize },

    #[error("PLY parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported format version {found:?} (supported: {supported})")]
    UnsupportedVersion { found: String, supported: &'static str },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
