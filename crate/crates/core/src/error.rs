use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),

    #[error("right-hand side is zero; the solution is x = 0")]
    ZeroRhs,

    /// `dᵀAd ≤ 0` during a CG step.
    #[error("matrix is not positive definite: d^T A d = {curvature:e} at iteration {iteration}")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    /// Non-positive pivot in a dense Cholesky factorization.
    #[error("Cholesky breakdown at row {row}: pivot {pivot:e}; matrix is not positive definite")]
    NotSpd { row: usize, pivot: f64 },

    #[error("CG already converged at iteration {0}")]
    AlreadyConverged(usize),

    /// A negative β from the CG recurrences (cannot happen in exact arithmetic).
    #[error("recurrence breakdown: beta_{index} = {value:e}")]
    Breakdown { index: usize, value: f64 },

    #[error("singular tridiagonal matrix (zero pivot at row {0})")]
    Singular(usize),

    #[error("prescribed nodes a = {a:e}, b = {b:e} do not bracket the Ritz values")]
    Bracketing { a: f64, b: f64 },

    #[error("non-positive sequence value {value:e} at position {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense oracle refuses n = {n} (limit {limit})")]
    TooLarge { n: usize, limit: usize },
}
