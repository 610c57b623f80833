//! Foundation numerics shared by every other module.

mod density;
mod expm;
mod json;
mod random;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use density::{partial_trace_b, reduced_density_a, spectral_entropy, von_neumann_entropy, EIGEN_FLOOR};
pub use expm::{herm_expm, HermitianEigen};
pub use json::{matrix_from_json, matrix_to_json, read_matrix, write_matrix, MatrixJson};
pub use random::{
    complex_gaussian, random_hermitian, random_hermitian_with, random_state, random_state_with,
    random_unitary, random_unitary_with, seeded_rng, start_rng,
};
pub use state::{schmidt_decompose, PureState, SchmidtState};

/// Dense complex matrix, row/column indexed. Products of subsystems are laid
/// out with the first factor as the most significant index.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Tolerance on ‖ψ‖ = 1 for states handed to the library.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on H − H† for Hamiltonians handed to the library.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on U†U − I for Schmidt bases.
pub const UNITARY_TOL: f64 = 1e-10;

/// Logarithm base used when reporting entropies and rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nat,
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    /// Converts a quantity measured in nats into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nat => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }
}

/// Largest entrywise |A_ij − conj(A_ji)|. Non-square input yields +∞.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn ensure_hermitian(a: &ComplexMatrix, tol: f64) -> crate::Result<()> {
    let defect = hermiticity_defect(a);
    if defect > tol {
        return Err(crate::Error::NotHermitian { defect });
    }
    Ok(())
}

/// Largest entrywise |U†U − I|.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// ‖A‖_max, the largest entry modulus.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}
