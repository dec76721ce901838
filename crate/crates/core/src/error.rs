use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown color space `{0}`")]
    UnknownSpace(String),

    #[error("template has no pixels")]
    EmptyTemplate,

    #[error("invalid bin count {0}: expected one of 16, 32, 64, 128")]
    InvalidBins(usize),

    #[error("color space mismatch: image is {image}, histogram is {histogram}")]
    SpaceMismatch { image: String, histogram: String },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("need at least {needed} pixels for clustering, got {got}")]
    TooFewPixels { needed: usize, got: usize },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corpus error: {0}")]
    CorpusMismatch(String),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("no reachable candidate viewpoints")]
    NoCandidates,

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("i/o failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec failure on {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error on {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
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

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownSpace(_)
            | Error::InvalidBins(_)
            | Error::InvalidSweep(_)
            | Error::Config(_)
            | Error::InvalidWorld(_)
            | Error::Json { .. } => 2,
            Error::CorpusMismatch(_)
            | Error::MissingInput(_)
            | Error::Io { .. }
            | Error::Image { .. }
            | Error::Csv(_)
            | Error::InvalidRaster(_)
            | Error::DimensionMismatch { .. } => 3,
            Error::EmptyTemplate
            | Error::SpaceMismatch { .. }
            | Error::TooFewPixels { .. }
            | Error::NoCandidates
            | Error::Invariant(_) => 4,
        }
    }
}
