use std::path::PathBuf;

use thiserror::Error;

use crate::stream::Timestamp;

/// Errors produced by sketches, histograms and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An element id outside `[1, universe]`.
    #[error("element id {id} outside universe [1, {universe}]")]
    Domain { id: u64, universe: u64 },

    /// A timestamp that is not exactly one past the previous one.
    #[error("out-of-order timestamp {got}, expected {expected}")]
    Ordering { expected: Timestamp, got: Timestamp },

    /// A query issued before any data was ingested.
    #[error("no data: {0}")]
    NoData(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A hash-function index beyond the size of its family.
    #[error("hash index {index} out of range for a family of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// Malformed input, with a human-readable location (line or byte offset).
    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that `value` lies in the open unit interval.
pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{value} is not in (0, 1)")))
    }
}
