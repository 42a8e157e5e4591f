use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the cable models, the allocator and the planner.
#[derive(Debug, Error)]
pub enum Error {
    /// Frequency outside the calibrated window of the cable models.
    #[error("frequency {f_mhz} MHz outside model validity window [{min_mhz}, {max_mhz}] MHz")]
    OutOfValidity {
        f_mhz: f64,
        min_mhz: f64,
        max_mhz: f64,
    },

    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Calibration file is malformed or a record violates a model invariant.
    #[error("calibration error at `{key}`: {reason}")]
    Calibration { key: String, reason: String },

    /// Scenario file failed to parse or validate.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// More antennas requested than the cable can carry.
    #[error("capacity exceeded: {requested} antennas requested, {available} available (short by {})", requested - available)]
    CapacityExceeded { requested: usize, available: usize },

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

    /// True for failures caused by the filesystem rather than by input content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
