use thiserror::Error;

use crate::expr::ExprError;

/// Errors raised by mesh construction, element integration and the harness.
#[derive(Debug, Error)]
pub enum QuadError {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("quadrature order {0} out of range (1..=64)")]
    OrderOutOfRange(usize),

    #[error("ambiguous sign pattern {0:?}: mesh displacement did not clear the level set")]
    AmbiguousSigns(Vec<i8>),

    #[error("no sign change of F on segment (F(A) = {fa:e}, F(B) = {fb:e})")]
    NoSignChange { fa: f64, fb: f64 },

    #[error("root iteration did not converge within {0} steps")]
    NoConvergence(usize),

    #[error("singular implicit-function Jacobian (|det| = {det:e}, scale = {scale:e}); ray tangent to the level set")]
    SingularJacobian { det: f64, scale: f64 },

    #[error("no crossing of the level set along element ray; mesh too coarse, increase n")]
    RayMiss,

    #[error("vertex displacement failed: {0}; mesh too coarse, increase n")]
    DisplacementFailed(String),

    #[error("mesh validation failed (min clearance ratio {min_clearance:.3e}, max sign changes per edge {max_sign_changes}); increase n")]
    ValidationFailed {
        min_clearance: f64,
        max_sign_changes: usize,
    },

    #[error("non-finite field value at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("convergence study needs at least one n")]
    EmptyStudy,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QuadError {
    /// Process exit code: 2 parse, 3 mesh/displacement, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            QuadError::Expr(_) => 2,
            QuadError::AmbiguousSigns(_)
            | QuadError::DisplacementFailed(_)
            | QuadError::ValidationFailed { .. }
            | QuadError::RayMiss
            | QuadError::NoSignChange { .. } => 3,
            QuadError::SingularJacobian { .. }
            | QuadError::NoConvergence(_)
            | QuadError::NonFinite(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, QuadError>;
