use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{ensure_hermitian, ComplexMatrix, HERMITIAN_TOL};
use crate::Result;

/// Spectral decomposition H = V Λ V† of a Hermitian matrix, kept around so
/// that e^{−iHt} can be applied for many t.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    values: DVector<f64>,
    vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        ensure_hermitian(h, HERMITIAN_TOL)?;
        // symmetrize so the solver sees an exactly Hermitian input
        let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        Ok(HermitianEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    fn phases(&self, t: f64) -> DVector<Complex64> {
        self.values.map(|l| Complex64::from_polar(1.0, -l * t))
    }

    /// e^{−iHt}.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (j, p) in self.phases(t).iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= *p;
        }
        scaled * self.vectors.adjoint()
    }

    /// e^{−iHt} v without forming the propagator.
    pub fn evolve(&self, v: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let coords = self.vectors.ad_mul(v).component_mul(&self.phases(t));
        &self.vectors * coords
    }
}

/// U = e^{−iHt} through the eigendecomposition of H.
pub fn herm_expm(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}
