use thiserror::Error;

use crate::matcore::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("eigenvalue {eigenvalue:.6e} lies outside the function's domain")]
    DomainError { eigenvalue: f64 },

    #[error("unitary has eigenvalue {eigenvalue} within the branch-cut tolerance of -1")]
    BranchAmbiguity { eigenvalue: C64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("completeness violated: residual {residual:.6e}")]
    CompletenessViolation { residual: f64 },

    #[error("residual measurement family is incomplete on its support: residual {residual:.6e}")]
    SingularResidual { residual: f64 },

    #[error("operation requires a {expected} instrument, got {found}")]
    WrongClass { expected: &'static str, found: &'static str },

    #[error("|x| = {x} exceeds the curve clamp {clamp}")]
    ClampExceeded { x: f64, clamp: f64 },

    #[error("branch probability {p:.3e} is numerically degenerate")]
    DegenerateProbability { p: f64 },

    #[error("walk did not terminate within {steps} steps (x = {x})")]
    MaxStepsExceeded { steps: usize, x: f64 },

    #[error("point {x} is not on the lattice -{threshold} + k*{epsilon}")]
    OffLattice { x: f64, threshold: f64, epsilon: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}
