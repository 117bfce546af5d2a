use thiserror::Error;

/// Errors raised by the geometry kernels, samplers, criteria and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    /// The radial frame is not defined at the origin; callers fall back to
    /// the `d_rad := d_tot` convention there.
    #[error("radial frame is undefined at the origin")]
    UndefinedFrame,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("overflow guard tripped: {0}")]
    Overflow(String),

    #[error("hyperboloid drift {drift:e} exceeds tolerance at step {step}")]
    HyperboloidDrift { step: u64, drift: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
