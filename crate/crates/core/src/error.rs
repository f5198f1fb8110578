use thiserror::Error;

/// Library-wide error type. Analytic routines fail loudly rather than
/// silently truncating or extrapolating.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// τ = 0 has no pointwise propagator value (delta distribution).
    #[error("zero elapsed time: the propagator is a delta at the start point")]
    DeltaInitial,

    #[error("{what} did not converge: {detail}")]
    NonConvergent { what: &'static str, detail: String },

    #[error("{what} evaluated outside its declared regime: {detail}")]
    OutsideRegime { what: &'static str, detail: String },

    #[error("insufficient data for {what}: {detail}")]
    InsufficientData { what: &'static str, detail: String },

    #[error("negative density {value:e} at {context}: beyond numerical tolerance")]
    NegativeDensity { value: f64, context: String },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
