use thiserror::Error;

pub type Result<T> = std::result::Result<T, GibbsError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GibbsError {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate in point")]
    NonFiniteCoordinate,

    #[error("mark {0} outside [0, 1]")]
    InvalidMark(f64),

    #[error("invalid window: lower[{axis}] = {lower} is not below upper[{axis}] = {upper}")]
    InvalidWindow { axis: usize, lower: f64, upper: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("boundary condition has a point inside the active window")]
    BoundaryInsideWindow,

    #[error("model is not locally stable; no dominating intensity is available")]
    NotLocallyStable,

    #[error(
        "rejection budget of {attempts} attempts exhausted (empirical acceptance rate {acceptance_rate:.3e})"
    )]
    BudgetExhausted { attempts: u64, acceptance_rate: f64 },

    #[error("series not summable at cutoff {cutoff}: {reason}")]
    NotSummable { cutoff: usize, reason: String },

    #[error("malformed point list: {0}")]
    MalformedPoints(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> GibbsError {
    GibbsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
