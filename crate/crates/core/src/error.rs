use thiserror::Error;

/// Errors raised across the library.
///
/// Infeasible objective evaluations during optimisation are reported in-band
/// (see [`crate::functionals::ObjectiveEval`]) and never surface here unless a
/// caller explicitly asks for a hard failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate polytope: {0}")]
    DegeneratePolytope(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("point ({0}, {1}) is on or outside the polytope boundary")]
    BoundaryPoint(f64, f64),

    #[error("Hessian is not positive definite at ({0}, {1})")]
    IndefiniteHessian(f64, f64),

    #[error("integrand is infeasible at one or more quadrature points")]
    InfeasibleIntegrand,

    #[error("objective is infeasible at the starting point")]
    InfeasibleStart,

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("normal equations are singular even with damping {0:e}")]
    SingularNormalEquations(f64),

    #[error("negative radicand {0} in Einstein constant")]
    NegativeRadicand(f64),

    #[error("denominator Gram matrix is not positive definite")]
    IndefiniteGram,

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
