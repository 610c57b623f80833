use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{unitarity_defect, ComplexMatrix, NORM_TOL, UNITARY_TOL};
use crate::{Error, Result};

/// Pure state of a bipartite system A⊗B. Amplitude `a * d_b + b` belongs to
/// the computational basis vector |a⟩_A|b⟩_B.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    d_a: usize,
    d_b: usize,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized (within 1e-12).
    pub fn new(d_a: usize, d_b: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        check_dims(d_a, d_b)?;
        if amplitudes.len() != d_a * d_b {
            return Err(Error::DimensionMismatch {
                context: "pure state amplitudes",
                expected: d_a * d_b,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { d_a, d_b, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(d_a: usize, d_b: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(d_a, d_b, amplitudes.unscale(norm))
    }

    /// Reads a state from its d_A×d_B amplitude matrix, Ψ_ab = ⟨ab|ψ⟩.
    pub fn from_amplitude_matrix(psi: &ComplexMatrix) -> Result<Self> {
        let (d_a, d_b) = psi.shape();
        let amplitudes = DVector::from_iterator(d_a * d_b, (0..d_a).flat_map(|a| (0..d_b).map(move |b| psi[(a, b)])));
        Self::new(d_a, d_b, amplitudes)
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// The amplitudes reshaped into the d_A×d_B matrix Ψ_ab.
    pub fn amplitude_matrix(&self) -> ComplexMatrix {
        DMatrix::from_fn(self.d_a, self.d_b, |a, b| self.amplitudes[a * self.d_b + b])
    }

    /// |ψ⟩⟨ψ|.
    pub fn density_matrix(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// Applies an operator on the full space and renormalizes away roundoff.
    pub fn apply(&self, op: &ComplexMatrix) -> Result<Self> {
        let n = self.amplitudes.len();
        if op.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "operator applied to state",
                expected: n,
                found: op.nrows(),
            });
        }
        Self::normalized(self.d_a, self.d_b, op * &self.amplitudes)
    }
}

fn check_dims(d_a: usize, d_b: usize) -> Result<()> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::InvalidArgument("subsystem dimensions must be at least 1".into()));
    }
    Ok(())
}

/// A pure state in Schmidt form ψ = Σ_i C_i |i⟩_A|i⟩_B.
///
/// `basis_a` and `basis_b` are full unitaries whose first `d = min(d_A, d_B)`
/// columns are the Schmidt vectors; the remaining columns complete the bases
/// and only matter when rotating operators into the Schmidt product frame.
/// Coefficients are sorted nonincreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtState {
    coefficients: DVector<f64>,
    d_a: usize,
    d_b: usize,
    basis_a: ComplexMatrix,
    basis_b: ComplexMatrix,
}

impl SchmidtState {
    /// Schmidt state whose Schmidt vectors are computational basis vectors.
    /// The coefficients are sorted; the bases carry the permutation, so the
    /// physical state is Σ_i coeffs[i] |i⟩|i⟩ in the computational basis.
    pub fn from_coefficients(coeffs: &[f64], d_a: usize, d_b: usize) -> Result<Self> {
        check_dims(d_a, d_b)?;
        let d = d_a.min(d_b);
        if coeffs.len() != d {
            return Err(Error::DimensionMismatch {
                context: "Schmidt coefficient count",
                expected: d,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument("Schmidt coefficients must be finite and nonnegative".into()));
        }
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let order = canonical_order(coeffs);
        let coefficients = DVector::from_iterator(d, order.iter().map(|&i| coeffs[i]));
        let permuted = |n: usize| {
            let mut m = ComplexMatrix::zeros(n, n);
            for (col, &src) in order.iter().enumerate() {
                m[(src, col)] = Complex64::new(1.0, 0.0);
            }
            for k in d..n {
                m[(k, k)] = Complex64::new(1.0, 0.0);
            }
            m
        };
        Ok(SchmidtState {
            coefficients,
            d_a,
            d_b,
            basis_a: permuted(d_a),
            basis_b: permuted(d_b),
        })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Schmidt rank bound d = min(d_A, d_B).
    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn basis_a(&self) -> &ComplexMatrix {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &ComplexMatrix {
        &self.basis_b
    }

    /// Squared coefficients, the spectrum of ρ_A.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// basis_A ⊗ basis_B, mapping Schmidt product coordinates to computational ones.
    pub fn product_frame(&self) -> ComplexMatrix {
        self.basis_a.kronecker(&self.basis_b)
    }

    /// Index of |i⟩_A|j⟩_B inside the product frame.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        i * self.d_b + j
    }

    /// The Schmidt pair vector |i⟩_A|i⟩_B in computational coordinates.
    pub fn pair_vector(&self, i: usize) -> DVector<Complex64> {
        let a = self.basis_a.column(i);
        let b = self.basis_b.column(i);
        DVector::from_iterator(self.d_a * self.d_b, (0..self.d_a).flat_map(|x| (0..self.d_b).map(move |y| a[x] * b[y])))
    }

    /// Σ_i C_i |i⟩|i⟩ assembled in the computational basis.
    pub fn to_pure_state(&self) -> PureState {
        let mut amps = DVector::zeros(self.d_a * self.d_b);
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c != 0.0 {
                amps += self.pair_vector(i) * Complex64::new(c, 0.0);
            }
        }
        PureState::normalized(self.d_a, self.d_b, amps).expect("Schmidt coefficients are normalized")
    }
}

/// Indices sorted by nonincreasing value, ties by original index.
fn canonical_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}

/// Schmidt decomposition through the SVD of the amplitude matrix Ψ = U Σ V†.
///
/// Each Schmidt vector on A is rotated so its largest-modulus entry is real
/// and positive; the partner on B absorbs the conjugate phase, so |i⟩|i⟩ and
/// hence every reported quantity is reproducible.
pub fn schmidt_decompose(psi: &PureState) -> Result<SchmidtState> {
    let norm = psi.amplitudes.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let (d_a, d_b) = (psi.d_a, psi.d_b);
    let d = d_a.min(d_b);
    let svd = psi.amplitude_matrix().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let order = canonical_order(&sigma);

    let mut cols_a = Vec::with_capacity(d);
    let mut cols_b = Vec::with_capacity(d);
    for &k in &order {
        let mut a: DVector<Complex64> = u.column(k).into_owned();
        let mut b: DVector<Complex64> = v_t.row(k).transpose();
        let pivot = a.iter().enumerate().fold((0, 0.0), |best, (i, z)| {
            if z.norm() > best.1 + 1e-12 { (i, z.norm()) } else { best }
        });
        if pivot.1 > 0.0 {
            let phase = a[pivot.0] / pivot.1;
            a *= phase.conj();
            b *= phase;
        }
        cols_a.push(a);
        cols_b.push(b);
    }
    let basis_a = complete_unitary(cols_a, d_a);
    let basis_b = complete_unitary(cols_b, d_b);
    for basis in [&basis_a, &basis_b] {
        let defect = unitarity_defect(basis);
        if defect > UNITARY_TOL {
            return Err(Error::InvalidArgument(format!("Schmidt basis lost unitarity (defect {defect:.3e})")));
        }
    }

    let mut coefficients = DVector::from_iterator(d, order.iter().map(|&k| sigma[k]));
    let total = coefficients.norm();
    coefficients.unscale_mut(total);
    Ok(SchmidtState { coefficients, d_a, d_b, basis_a, basis_b })
}

/// Orthonormalizes `cols` (modified Gram–Schmidt, two passes) and extends
/// them with computational basis vectors to an n×n unitary.
fn complete_unitary(cols: Vec<DVector<Complex64>>, n: usize) -> ComplexMatrix {
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let push = |v: DVector<Complex64>, basis: &mut Vec<DVector<Complex64>>, min_norm: f64| {
        let mut w = v;
        for _ in 0..2 {
            for q in basis.iter() {
                let overlap = q.dotc(&w);
                w -= q * overlap;
            }
        }
        let norm = w.norm();
        if norm > min_norm {
            basis.push(w.unscale(norm));
            true
        } else {
            false
        }
    };
    for v in cols {
        let ok = push(v, &mut basis, 1e-8);
        debug_assert!(ok, "singular vectors must be linearly independent");
    }
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = DVector::zeros(n);
        e[k] = Complex64::new(1.0, 0.0);
        push(e, &mut basis, 0.1);
    }
    ComplexMatrix::from_columns(&basis)
}
