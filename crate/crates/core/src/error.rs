use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter outside its admissible range. `name` is the
    /// user-facing parameter name so front ends can report it verbatim.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("state is unphysical: minimum eigenvalue {min_eigenvalue:e} below tolerance")]
    Unphysical { min_eigenvalue: f64 },

    #[error("map is not symplectic (deviation {0:e})")]
    NotSymplectic(f64),

    #[error("truncation leakage {leakage:e} exceeds the hard limit {limit:e}; raise the cutoff")]
    CutoffLeakage { leakage: f64, limit: f64 },

    #[error("post-selection weight {weight:e} is degenerate")]
    DegeneratePostSelection { weight: f64 },

    #[error("matrix is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("epsilon is singular: S = {s:e} is numerically zero")]
    SingularEpsilon { s: f64 },

    #[error("tuning parameter {lambda} outside the admissible interval (0, {bound})")]
    LambdaOutOfRange { lambda: f64, bound: f64 },

    #[error("recursive schedules need a power-of-two copy count, got {0}")]
    NotPowerOfTwo(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
