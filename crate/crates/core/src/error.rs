use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("structure constants violate the Jacobi identity (residual {residual:.3e})")]
    JacobiViolation { residual: f64 },

    #[error("gram matrix is not symmetric")]
    NotSymmetric,

    #[error("gram matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("bracket index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("matrix is not an element of the {model} model group")]
    NotGroupElement { model: String },

    #[error("vector is not tangent at the given group point (least-squares residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("phi is singular at s = {s}")]
    PhiSingular { s: f64 },

    #[error("b = {b} is outside the admissible range [0, {b0})")]
    BOutOfRange { b: f64, b0: f64 },

    #[error("strip |s| <= {b} contains a singular point of phi")]
    SingularInStrip { b: f64 },

    #[error("no b with positive regularity margin exists; phi defines no regular metric")]
    NonRegular,

    #[error("metric evaluation at the zero vector is undefined")]
    ZeroVector,

    #[error("inadmissible structure: |X| = {b:.6} exceeds the regularity bound {bound:.6}")]
    Inadmissible { b: f64, bound: f64 },

    #[error("finite-difference Hessian asymmetry {asymmetry:.3e} exceeds tolerance")]
    AsymmetricHessian { asymmetry: f64 },

    #[error("matrix is not an automorphism of the algebra (residual {residual:.3e})")]
    NotAutomorphism { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("model `{model}` provides no logarithm; group lifts unavailable")]
    LogUnavailable { model: String },

    #[error("lifted map fails the homomorphism check (residual {residual:.3e})")]
    NotHomomorphism { residual: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
