use thiserror::Error;

/// Errors raised by constructors and certificate routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("invalid dimensions: n = {n}, d = {d} (need n >= 2, d >= 1)")]
    InvalidDims { n: usize, d: usize },

    #[error("dimension mismatch: expected (n = {expected_n}, d = {expected_d}), got (n = {n}, d = {d})")]
    DimensionMismatch {
        expected_n: usize,
        expected_d: usize,
        n: usize,
        d: usize,
    },

    #[error("vector `{field}` has length {got}, expected {expected}")]
    BadLength {
        field: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),

    #[error("point {index} has norm {norm}, outside the unit ball")]
    OutsideBall { index: usize, norm: f64 },

    #[error("operation requires d = 1, got d = {0}")]
    RequiresD1(usize),

    #[error("dimension d = {0} too large for 2^d expansion (max 20)")]
    TooManyPatterns(usize),

    #[error("target norm^2 = {norm2} exceeds n = {n}")]
    TargetOutsideBall { norm2: f64, n: usize },

    #[error("infeasible sos parameter c = {c}: {reason}")]
    InfeasibleParameter { c: f64, reason: String },

    #[error("degenerate critical data: {0}")]
    Degenerate(String),

    #[error("root search did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = ConeError> = std::result::Result<T, E>;
