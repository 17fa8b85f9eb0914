use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max |A - Aᵗ| = {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    #[error("complex Hessian is singular at the base point (|det| = {det:.3e})")]
    SingularHessian { det: f64 },

    #[error("quadrature under-resolved: need at least {required} points per axis, got {provided}")]
    UnderResolved { required: usize, provided: usize },

    #[error("budget exceeded for {what}: requested {requested:.3e}, limit {limit:.3e}")]
    BudgetExceeded { what: String, requested: f64, limit: f64 },

    #[error("decay fit unstable: |E| = {magnitude:.3e} at t = {t}")]
    UnstableFit { t: f64, magnitude: f64 },

    #[error("cap radius r = {r} violates r < {limit}")]
    RadiusTooLarge { r: f64, limit: f64 },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("transversality floor violated: wedge {wedge:.3e} < {floor:.3e} for tuple {tuple:?}")]
    TransversalityViolated { tuple: Vec<usize>, wedge: f64, floor: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
