use std::io;

use thiserror::Error;

/// Errors raised by the estimation, conversion and recognition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol ({remainder} bits left over)")]
    BitCount {
        len: usize,
        bits_per_symbol: usize,
        remainder: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("signal has zero power")]
    ZeroPower,

    #[error("signal too short: need at least {required} samples, got {actual}")]
    TooShort { required: usize, actual: usize },

    #[error("occupied band violates Nyquist bound: {0}")]
    Nyquist(String),

    #[error("low-pass cutoff {cutoff} exceeds the aliasing bound 0.5/{factor} = {bound}")]
    Aliasing { cutoff: f64, factor: usize, bound: f64 },

    #[error("detected band fills the whole spectrum")]
    BandFillsSpectrum,

    #[error("detected band touches spectrum edge (bins {start}..={end} of {n_fft}); carrier would wrap around")]
    Wraparound {
        start: usize,
        end: usize,
        n_fft: usize,
    },

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Shape {
        what: String,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("forward cache missing; run a training forward pass before backward")]
    MissingCache,

    #[error("dataset needs at least two classes, found {0}")]
    SingleClass(usize),

    #[error("partition `{0}` would be empty")]
    EmptyPartition(&'static str),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(what: impl Into<String>, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            what: what.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
