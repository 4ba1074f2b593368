use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bound {bound} does not apply to a {regime} propagator")]
    InapplicableBound { bound: String, regime: String },

    #[error("multiplier value {value} violates the nondegeneracy floor {floor}")]
    FloorViolation { value: f64, floor: f64 },

    #[error("state became non-finite at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("ensembles are not paired by stream id")]
    Unpaired,

    #[error("only {survived} of {total} samples survived; at least {required} required")]
    InsufficientSurvivors {
        survived: usize,
        total: usize,
        required: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
