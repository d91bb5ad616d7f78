use thiserror::Error;

use crate::plant::GeneratorState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("stale measurement: generator at t={gen_t}, grid at t={grid_t}")]
    StaleMeasurement { gen_t: f64, grid_t: f64 },

    /// The rotor integration produced a non-finite value. Carries the last
    /// state that was still finite.
    #[error("numerical divergence at t={}", last_good.t)]
    NumericalDivergence { last_good: GeneratorState },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value for `{key}`: {msg}")]
    Config { key: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {value}")))
    }
}
