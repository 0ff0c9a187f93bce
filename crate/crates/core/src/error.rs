use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {value} outside {range}")]
    ProbabilityOutOfRange { value: f64, range: &'static str },

    #[error("need at least {needed} observations, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("empty arm set")]
    EmptyArmSet,

    #[error("operation requires Gaussian arms; arm {arm} is not Gaussian")]
    NonGaussian { arm: usize },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("horizon {horizon} too small for warm-up of {needed} rounds")]
    HorizonTooShort { horizon: usize, needed: usize },

    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks `p` lies in the open unit interval.
pub(crate) fn check_open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            value: p,
            range: "(0, 1)",
        })
    }
}
