use super::{ComplexMatrix, LogBase, PureState};
use crate::{Error, Result};

/// Eigenvalues in [−1e-10, EIGEN_FLOOR] count as exact zeros in the entropy.
pub const EIGEN_FLOOR: f64 = 1e-12;
const NEGATIVE_CLAMP: f64 = -1e-10;
const NEGATIVE_REJECT: f64 = -1e-8;
const TRACE_TOL: f64 = 1e-8;

/// ρ_A = tr_B ρ for ρ acting on A⊗B (A the most significant index).
pub fn partial_trace_b(rho: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    let n = d_a * d_b;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "partial trace input",
            expected: n,
            found: rho.nrows(),
        });
    }
    Ok(ComplexMatrix::from_fn(d_a, d_a, |a, a2| {
        (0..d_b).map(|b| rho[(a * d_b + b, a2 * d_b + b)]).sum()
    }))
}

/// ρ_A of a pure state, ΨΨ† without forming the full projector.
pub fn reduced_density_a(psi: &PureState) -> ComplexMatrix {
    let m = psi.amplitude_matrix();
    &m * m.adjoint()
}

/// −Σ λ log λ over the eigenvalues of a density matrix.
pub fn von_neumann_entropy(rho: &ComplexMatrix, base: LogBase) -> Result<f64> {
    super::ensure_hermitian(rho, TRACE_TOL)?;
    let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidArgument(format!("density matrix trace is {trace}, expected 1")));
    }
    let eigs = rho.clone().symmetric_eigenvalues();
    let nats = spectral_entropy(eigs.iter().copied(), EIGEN_FLOOR)?;
    Ok(base.from_nats(nats))
}

/// Entropy in nats of a spectrum. Values at or below `positive_floor`
/// (and small negatives down to −1e-10) contribute nothing; anything below
/// −1e-8 is rejected.
pub fn spectral_entropy(eigs: impl IntoIterator<Item = f64>, positive_floor: f64) -> Result<f64> {
    let mut s = 0.0;
    for lambda in eigs {
        if lambda < NEGATIVE_REJECT {
            return Err(Error::NegativeEigenvalue { value: lambda });
        }
        if lambda <= positive_floor || lambda <= 0.0 {
            debug_assert!(lambda >= NEGATIVE_CLAMP || lambda >= NEGATIVE_REJECT);
            continue;
        }
        s -= lambda * lambda.ln();
    }
    Ok(s.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::SchmidtState;
    use num_complex::Complex64;

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { Complex64::new(v[i], 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    #[test]
    fn entropy_reference_values() {
        assert_eq!(von_neumann_entropy(&diag(&[1.0, 0.0]), LogBase::Nat).unwrap(), 0.0);
        let ln2 = von_neumann_entropy(&diag(&[0.5, 0.5]), LogBase::Nat).unwrap();
        assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5]), LogBase::Two).unwrap() - 1.0).abs() < 1e-15);
        // −0.9 ln 0.9 − 0.1 ln 0.1
        let s = von_neumann_entropy(&diag(&[0.9, 0.1]), LogBase::Nat).unwrap();
        assert!((s - 0.325_082_973_391_448_2).abs() < 1e-15);
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped_large_ones_rejected() {
        let s = von_neumann_entropy(&diag(&[1.0 + 1e-11, -1e-11]), LogBase::Nat).unwrap();
        assert!(s.abs() < 1e-9);
        assert!(matches!(
            von_neumann_entropy(&diag(&[1.0 + 1e-6, -1e-6]), LogBase::Nat),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let product = SchmidtState::from_coefficients(&[1.0, 0.0], 2, 2).unwrap().to_pure_state();
        let rho_a = partial_trace_b(&product.density_matrix(), 2, 2).unwrap();
        assert!((rho_a - diag(&[1.0, 0.0])).camax() < 1e-15);

        let bell = SchmidtState::from_coefficients(&[r, r], 2, 2).unwrap().to_pure_state();
        let rho_a = partial_trace_b(&bell.density_matrix(), 2, 2).unwrap();
        assert!((rho_a - diag(&[0.5, 0.5])).camax() < 1e-15);

        let skewed = SchmidtState::from_coefficients(&[0.9f64.sqrt(), 0.1f64.sqrt()], 2, 2).unwrap().to_pure_state();
        let rho_a = partial_trace_b(&skewed.density_matrix(), 2, 2).unwrap();
        assert!((rho_a - diag(&[0.9, 0.1])).camax() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_size() {
        let rho = ComplexMatrix::identity(5, 5);
        assert!(matches!(partial_trace_b(&rho, 2, 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reduced_density_matches_partial_trace() {
        let psi = crate::qcore::random_state(3, 2, 4).unwrap();
        let a = reduced_density_a(&psi);
        let b = partial_trace_b(&psi.density_matrix(), 3, 2).unwrap();
        assert!((a - b).camax() < 1e-15);
    }
}
