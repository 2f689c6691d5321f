use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing sequence metadata: {0}")]
    MissingMeta(PathBuf),

    #[error("malformed netpbm file {path}: {reason}")]
    Netpbm { path: PathBuf, reason: String },

    #[error("frame numbering gap: expected frame {expected}, found {found}")]
    FrameGap { expected: usize, found: usize },

    #[error("no thermal frames found in {0}")]
    NoFrames(PathBuf),

    #[error("thermal/RGB frame count mismatch: {thermal} thermal, {rgb} rgb")]
    FrameCountMismatch { thermal: usize, rgb: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("invalid metadata: {0}")]
    InvalidMeta(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("median is zero; frame is degenerate")]
    ZeroMedian,

    #[error("hull vertex {0:?} is not a point of the contour")]
    HullVertexNotOnContour((i32, i32)),

    #[error("no hand-free frame available for a baseline")]
    NoBaseline,

    #[error("reference object lost")]
    ReferenceLost,

    #[error("reference object not visible in the first frame")]
    ReferenceLostInFirstFrame,

    #[error("scene event leaves the frame: {0}")]
    EventOutOfBounds(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("no results for clip {0}")]
    MissingResult(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
