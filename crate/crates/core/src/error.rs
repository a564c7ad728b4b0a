use thiserror::Error;

/// Errors raised by the representation builders and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("deformation parameter must be finite and non-zero, got {0}")]
    InvalidDeformation(f64),

    #[error("guard rail: |t|*(2l+1) = {product:.3} exceeds {limit} (two_l = {two_l}, t = {t})")]
    GuardRail {
        two_l: u32,
        t: f64,
        product: f64,
        limit: f64,
    },

    #[error("expected {expected} alpha parameters, got {got}")]
    AlphaCount { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{relation}: residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    Verification {
        relation: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("eigenvalue {eigenvalue} is not simple in s: nullity {nullity} detected")]
    EigenvalueClaim { eigenvalue: f64, nullity: usize },

    #[error("matrix is not lower triangular with the expected diagonal (offending entry ({row}, {col}))")]
    NotTriangular { row: usize, col: usize },

    #[error("entry ({row}, {col}) breaks the closed-form family: ratio {ratio} vs coefficient {expected}")]
    NotInFamily {
        row: usize,
        col: usize,
        ratio: f64,
        expected: f64,
    },

    #[error("K has no vanishing diagonal pivot; R*K = rhs has no singular family")]
    NoSingularPivot,

    #[error("R*K = rhs is inconsistent at row {row}, pivot {pivot} (mismatch {mismatch:.3e})")]
    NoSolution {
        row: usize,
        pivot: usize,
        mismatch: f64,
    },

    #[error("alpha parameter {index} is zero; gauge matching needs non-zero alphas")]
    DegenerateGauge { index: usize },

    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("sample point {x} is within {radius} of a coth pole")]
    PoleProximity { x: f64, radius: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
