use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("channel mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),

    #[error("grid must be non-empty with finite values")]
    InvalidGrid,

    #[error("spectrum is not conjugate-symmetric: imaginary residue {residue:e} against signal scale {scale:e}")]
    ConjugateSymmetryViolation { residue: f64, scale: f64 },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("{0} kernel spectra but {1} label spectra")]
    SampleCountMismatch(usize, usize),

    #[error("bin {index} has no unique minimizer (gamma1 = {gamma1}, gamma = {gamma}, lambda = {lambda})")]
    DegenerateBin {
        index: usize,
        gamma1: f64,
        gamma: f64,
        lambda: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image is empty")]
    EmptyImage,

    #[error("patch {width}x{height} is smaller than one {cell}x{cell} cell")]
    PatchTooSmall {
        width: usize,
        height: usize,
        cell: usize,
    },

    #[error("cosine window already applied")]
    DoubleWindowing,

    #[error("scale sample {index}: {source}")]
    ScaleSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("box {w}x{h} is too small (minimum {min} px per side)")]
    BoxTooSmall { w: f64, h: f64, min: f64 },

    #[error("missing ground truth file {0}")]
    MissingGroundTruth(PathBuf),

    #[error("no frames found in {0}")]
    NoFrames(PathBuf),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("no evaluation records")]
    EmptyRecords,

    #[error("runs cover different sequence sets: {0:?} vs {1:?}")]
    SequenceSetMismatch(Vec<String>, Vec<String>),

    #[error("unknown variant {0:?} (expected huber, huber+scale, ridge or ridge+scale)")]
    UnknownVariant(String),

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

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
