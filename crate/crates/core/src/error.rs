use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A truncation sits on a boundary that could not be resolved within the
    /// guard-bit cap.
    #[error("precision exhausted: truncation at scale {scale} unresolved after {guard} guard bits")]
    PrecisionExhausted { scale: u32, guard: u32 },

    /// A sampling loop ran past its depth cap.
    #[error("depth cap {cap} exceeded")]
    DepthExceeded { cap: u32 },

    /// A replay tape ran out of bits.
    #[error("bit tape exhausted after {consumed} bits")]
    TapeExhausted { consumed: u64 },

    #[error("{n} parties exceeds the enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("measurement set is not equatorial (party {party} has a nonzero elevation)")]
    NotEquatorial { party: usize },

    #[error("invalid angle: {0}")]
    InvalidAngle(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient samples: {got} trials, need at least {need}")]
    InsufficientSamples { got: u64, need: u64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
