use thiserror::Error;

use crate::model::Frame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dressed basis undefined: detuning and drive are both zero")]
    DegenerateFrame,

    #[error("expected a state in the {expected} frame, got {found}")]
    FrameMismatch { expected: Frame, found: Frame },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("step size underflow at t = {t} (h = {h:e}); tolerances cannot be met")]
    ToleranceFailure { t: f64, h: f64 },

    #[error("trace drifted by {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },

    #[error("lab-frame sampling too coarse: omega_L * dt = {0} exceeds pi/8")]
    Aliasing(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
