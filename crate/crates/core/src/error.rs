use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violates a value constraint (non-finite samples, empty input).
    #[error("data error: {0}")]
    Data(String),

    /// Operation is invalid for the current state (e.g. compressing twice).
    #[error("state error: {0}")]
    State(String),

    /// Shapes of the operands do not agree.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Weights(#[from] WeightsError),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Failures while loading, saving or validating a weight file.
#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("bad magic bytes {0:?}, not an .sfnw file")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("file truncated: {0}")]
    Truncated(String),

    #[error("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    #[error("unexpected tensor `{0}` not required by the architecture")]
    OrphanTensor(String),

    #[error("tensor `{0}` contains non-finite values")]
    NonFinite(String),
}

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
