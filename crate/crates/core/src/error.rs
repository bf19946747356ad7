use thiserror::Error;

/// Errors raised by the generator, analysis and evolution routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: ‖A − A†‖ = {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("operator is not an orthogonal projection (‖p² − p‖ = {0:.3e})")]
    NotProjection(f64),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("superoperator dimension {dim}² exceeds the cap {cap}²")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {0} does not match any Bohr frequency of the Hamiltonian")]
    UnmatchedFrequency(f64),

    #[error("state lacks the block structure: ‖[ρ, P]‖ = {0:.3e}")]
    MissingBlockStructure(f64),

    #[error("support condition violated: {0}")]
    Support(String),

    #[error("integration step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("positivity lost at t = {t}: minimum eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("long-time limit not reached: residual {residual:.3e} after t = {t}")]
    NotStationary { residual: f64, t: f64 },

    #[error("model specification: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
