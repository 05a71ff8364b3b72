use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the identification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("reference signal has zero energy")]
    ZeroEnergy,

    #[error("pole set is empty")]
    EmptyPoleSet,

    #[error("pole {index} at {pole} is not strictly inside the unit circle")]
    UnstablePole { index: usize, pole: Complex64 },

    #[error("pole {index} at {pole} is real-valued; a conjugate pair needs a nonzero imaginary part")]
    RealPole { index: usize, pole: Complex64 },

    #[error("system is unstable: denominator root {0} on or outside the unit circle")]
    UnstableSystem(Complex64),

    #[error("frequency grid is not uniform from 0 Hz (enable resampling to accept it)")]
    NonUniformGrid,

    #[error("adaptation diverged at step {step}: error power {error_power:.3e} vs input power {input_power:.3e}")]
    Diverged {
        step: usize,
        error_power: f64,
        input_power: f64,
    },

    #[error("prony order {order} must be below the shortest response length {shortest}")]
    OrderTooHigh { order: usize, shortest: usize },

    #[error("pole screening found {found} of {wanted} admissible pairs after {retries} retries")]
    NotEnoughPoles {
        found: usize,
        wanted: usize,
        retries: usize,
    },

    #[error("parameter draw rejected {0} times in a row")]
    SamplingExhausted(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
