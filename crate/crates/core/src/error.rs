use thiserror::Error;

/// Errors produced by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not skew-symmetric (defect {defect:e} exceeds {tolerance:e})")]
    NotSkew { defect: f64, tolerance: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("Bernoulli index {0} out of range (max 40)")]
    BernoulliOutOfRange(usize),

    #[error("series diverging after {terms} terms (last term norm {last_norm:e})")]
    SeriesDiverging { terms: usize, last_norm: f64 },

    #[error("kernel `{kernel}` is undefined at {at}")]
    KernelUndefined { kernel: String, at: f64 },

    #[error("function is undefined at eigenvalue {at}")]
    FunctionUndefined { at: f64 },

    #[error("exponents must satisfy p - s = 1 (got p = {p}, s = {s})")]
    InvalidExponents { p: i32, s: i32 },

    #[error("direction must be non-zero")]
    ZeroDirection,

    #[error("integrator aborted at step {step}: det F = {det:e}")]
    IntegratorAbort { step: usize, det: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
