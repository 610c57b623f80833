use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state is not normalized (norm {norm:.3e})")]
    NotNormalized { norm: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not Hermitian (max defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("density matrix has eigenvalue {value:.3e} below the negativity floor")]
    NegativeEigenvalue { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("no start converged ({starts} starts, best gradient norm {best_gradient:.3e} after {iterations} iterations)")]
    NoConvergence {
        starts: usize,
        iterations: usize,
        best_gradient: f64,
    },

    #[error("product dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("Hamiltonian does not have the ancilla-trivial structure (max violation {violation:.3e})")]
    NotStructured { violation: f64 },

    #[error("malformed matrix JSON: {0}")]
    Json(#[from] serde_json::Error),
}
