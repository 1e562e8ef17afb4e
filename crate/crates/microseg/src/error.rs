//! Crate-wide error type.

use std::fmt;
use std::io;

/// Errors produced by graph construction, kernels, training, quantization
/// and file I/O.
#[derive(Debug)]
pub enum Error {
    /// Configuration outside the supported grid or internally inconsistent.
    InvalidConfig(String),
    /// Tensor or parameter shapes do not line up.
    ShapeMismatch(String),
    /// Mask contains values other than 0 and 1.
    NonBinaryMask(String),
    /// A dataset or split is empty where at least one sample is required.
    EmptyDataset(String),
    /// Loss or gradient became non-finite during training.
    NonFinite(String),
    /// Quantization pipeline errors (missing params, unfolded layers, ...).
    Quantization(String),
    /// Model file is corrupt, truncated, or has an unsupported version.
    Format(String),
    /// Underlying I/O failure, with the path that caused it.
    Io(String, io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            Error::NonBinaryMask(m) => write!(f, "non-binary mask: {m}"),
            Error::EmptyDataset(m) => write!(f, "empty dataset: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Error::Quantization(m) => write!(f, "quantization: {m}"),
            Error::Format(m) => write!(f, "bad model file: {m}"),
            Error::Io(path, e) => write!(f, "i/o error on {path}: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(_, e) => Some(e),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
