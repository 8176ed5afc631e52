use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is singular (|det| = {det:e})")]
    SingularInput { det: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not unipotent: |(U - I)^n| = {residual:e}")]
    NotUnipotent { residual: f64 },

    #[error("no real logarithm: {0}")]
    NoRealLogarithm(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("group is not closed: product of elements {left} and {right} is not in the group")]
    NotClosed { left: usize, right: usize },

    #[error("bad character: {0}")]
    BadCharacter(String),

    #[error("group closure exceeded {limit} elements")]
    GroupTooLarge { limit: usize },

    #[error("linear map is not chi-equivariant (residual {residual:e})")]
    NotEquivariant { residual: f64 },

    #[error("matrix is not semisimple (minimal polynomial residual {residual:e})")]
    NotSemisimple { residual: f64 },

    #[error("linear part of the map is not invertible")]
    NonInvertibleLinearPart,

    #[error("C_{degree} operator is singular (smallest singular value {sigma_min:e})")]
    CkSingular { degree: usize, sigma_min: f64 },

    #[error("splitting failed: {0}")]
    SplitFailure(String),

    #[error("vector is not in the reduced phase space (residual {residual:e})")]
    NotInU { residual: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("inverting the reduced map failed (residual {residual:e})")]
    InverseNewtonFailed { residual: f64 },

    #[error("slope test failed: measured slope {slope:.3}, required {required:.3}")]
    SlopeTestFailed { slope: f64, required: f64 },
}
