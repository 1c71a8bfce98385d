use alloc::string::String;

use crate::linkbudget::BandId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} must be nonnegative and finite, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("band {0} has no receive chain")]
    NoReceiveChain(BandId),

    #[error("{what}: expected length {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("frame of {slots} slots exceeds the enumeration cap of {cap} slots; use shorter frames")]
    EnumerationCap { slots: usize, cap: usize },

    #[error("no forecaster for band {band} at horizon {horizon}")]
    MissingForecaster { band: BandId, horizon: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
