//! AM-FM image analysis and block-based face detection experiments.
//!
//! The pipeline: a small-kernel directional Gabor filterbank feeds dominant
//! component analysis (DCA) over the analytic image, producing instantaneous
//! amplitude (IA) and modulated-phase (FM) images. Frames are tiled into
//! 50x50 blocks with face-fraction labels, a reduced LeNet regressor is
//! trained from scratch on a chosen input representation, and detection
//! quality is scored with ROC/AUC.

pub mod analytic;
pub mod blocks;
pub mod dca;
pub mod eval;
pub mod fft;
pub mod filterbank;
pub mod nn;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod synthdata;
pub mod tensor;
pub mod train;

pub use raster::{ComplexImage, GrayImage};

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument or configuration (maps to CLI usage failures).
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Input data failed validation (bad manifests, malformed files).
    #[error("data validation error: {0}")]
    Validation(String),
    /// Numeric failure at run time (non-finite loss, degenerate AUC).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: std::path::PathBuf,
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<std::path::PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
