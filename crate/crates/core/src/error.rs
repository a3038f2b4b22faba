use thiserror::Error;

/// Errors raised by the library.
///
/// Parameter problems are caught when a value type is constructed, so most
/// sampling and analysis routines are infallible once their inputs exist.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A Strict-mode calibration was requested outside the proven domain.
    #[error("parameter domain violated: {inequality} (got {detail})")]
    Domain {
        inequality: &'static str,
        detail: String,
    },

    #[error("grid too coarse: step {step} exceeds {limit} (10x the distribution scale {scale}); use a finer step")]
    Resolution { step: f64, scale: f64, limit: f64 },

    #[error("grid steps differ: {left} vs {right}")]
    StepMismatch { left: f64, right: f64 },

    #[error("noise share spec targets {expected} but {found} was requested")]
    WrongTarget {
        expected: &'static str,
        found: &'static str,
    },

    #[error("participant index {index} out of range for n = {n}")]
    ParticipantIndex { index: usize, n: usize },

    #[error("cannot sum an empty list of shares")]
    EmptyShares,

    #[error("shift {shift} exceeds the usable grid half-width {half_width}")]
    ShiftOutOfRange { shift: f64, half_width: f64 },

    #[error("client {index}: value {value} outside range [{lo}, {hi}]")]
    Input {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}
