use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("frequency hierarchy violated: {which} separation is {ratio:.3} (need >= {required})")]
    HierarchyViolation {
        which: &'static str,
        ratio: f64,
        required: f64,
    },

    #[error("modified cyclotron frequency is complex: omega_c^2 < 2 omega_z^2")]
    ComplexFrequency,

    #[error("regime validation failed: {failed}")]
    RegimeViolation { failed: String },

    #[error("flip-flop coupling must be strictly positive")]
    ZeroCoupling,

    #[error("Hilbert space dimension {requested} exceeds the configured limit {limit}")]
    DimensionOverflow { requested: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("thermal sum needs {needed} terms per oscillator, limit is {max}")]
    Truncation { needed: usize, max: usize },

    #[error("oscillation contrast {contrast:.4} below 0.9; system left the dispersive regime")]
    FitFailure { contrast: f64 },

    #[error("dressed-state overlap {overlap:.4} below 0.9 for {state}")]
    StateTrackingFailure { state: &'static str, overlap: f64 },

    #[error("eigendecomposition failed to converge")]
    Eigen,
}
