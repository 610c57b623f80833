//! Closed-form rate Γ(ψ, H) and the energy statistics of H on ψ, all read off
//! H rotated into the Schmidt product basis of ψ.
//!
//! Only the Schmidt-diagonal block M_ij = ⟨ii|H|jj⟩ enters Γ, and only through
//! its imaginary part:
//!
//! Γ = 4 Σ_{i>j} C_i C_j log(C_i/C_j) Im M_ji = −4 Σ_i k_i C_i log C_i,  k = Im(M)·C.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qcore::{
    ensure_hermitian, schmidt_decompose, ComplexMatrix, PureState, SchmidtState, HERMITIAN_TOL,
};
use crate::{Error, Result};

/// The d×d block M_ij = ⟨ii|H|jj⟩ of a Hamiltonian in a Schmidt basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtBlock {
    m: ComplexMatrix,
}

impl SchmidtBlock {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        ensure_hermitian(&m, HERMITIAN_TOL)?;
        Ok(SchmidtBlock { m })
    }

    /// Block with M = i·M_I for a real antisymmetric M_I.
    pub fn from_imaginary(m_i: &DMatrix<f64>) -> Result<Self> {
        Self::new(m_i.map(|x| Complex64::new(0.0, x)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    /// M_R, symmetric.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.re)
    }

    /// M_I, antisymmetric.
    pub fn imag_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.im)
    }
}

fn check_hamiltonian(h: &ComplexMatrix, state: &SchmidtState) -> Result<()> {
    let n = state.d_a() * state.d_b();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian size vs state",
            expected: n,
            found: h.nrows(),
        });
    }
    ensure_hermitian(h, HERMITIAN_TOL)
}

/// W†HW with W = basis_A ⊗ basis_B: H in the Schmidt product basis of `state`.
pub fn schmidt_frame(h: &ComplexMatrix, state: &SchmidtState) -> Result<ComplexMatrix> {
    check_hamiltonian(h, state)?;
    let w = state.product_frame();
    Ok(w.adjoint() * h * w)
}

/// Inverse of [`schmidt_frame`]: takes an operator written in the Schmidt
/// product basis back to computational coordinates.
pub fn from_schmidt_frame(h_frame: &ComplexMatrix, state: &SchmidtState) -> ComplexMatrix {
    let w = state.product_frame();
    &w * h_frame * w.adjoint()
}

/// Reads M_ij = ⟨ii|H|jj⟩ for i, j below the Schmidt rank bound.
pub fn schmidt_block(h: &ComplexMatrix, state: &SchmidtState) -> Result<SchmidtBlock> {
    check_hamiltonian(h, state)?;
    let d = state.dim();
    let pairs: Vec<DVector<Complex64>> = (0..d).map(|i| state.pair_vector(i)).collect();
    let h_pairs: Vec<DVector<Complex64>> = pairs.iter().map(|v| h * v).collect();
    let m = ComplexMatrix::from_fn(d, d, |i, j| pairs[i].dotc(&h_pairs[j]));
    // exact Hermiticity for downstream antisymmetry assumptions
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SchmidtBlock::new(m)
}

/// Hamiltonian supported on span{|ii⟩} whose Schmidt block is `block`.
pub fn hamiltonian_from_block(block: &SchmidtBlock, state: &SchmidtState) -> ComplexMatrix {
    let d = state.dim();
    assert_eq!(block.dim(), d, "block dimension must match the Schmidt rank bound");
    let n = state.d_a() * state.d_b();
    let mut frame = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            frame[(state.pair_index(i, i), state.pair_index(j, j))] = block.matrix()[(i, j)];
        }
    }
    let h = from_schmidt_frame(&frame, state);
    (&h + h.adjoint()) * Complex64::new(0.5, 0.0)
}

/// k = M_I·C, the coordinates of H_I|ψ⟩ on the Schmidt-diagonal subspace.
pub fn k_vector(state: &SchmidtState, block: &SchmidtBlock) -> DVector<f64> {
    assert_eq!(block.dim(), state.dim(), "block dimension must match the Schmidt rank bound");
    block.imag_part() * state.coefficients()
}

/// Γ(ψ, H) in nats per unit time from the pairwise form. Pairs with a zero
/// coefficient or equal coefficients contribute exactly zero.
pub fn gamma_rate(state: &SchmidtState, block: &SchmidtBlock) -> f64 {
    let d = state.dim();
    assert_eq!(block.dim(), d, "block dimension must match the Schmidt rank bound");
    let c = state.coefficients();
    let m = block.matrix();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..i {
            let (ci, cj) = (c[i], c[j]);
            if ci == 0.0 || cj == 0.0 || ci == cj {
                continue;
            }
            total += ci * cj * (ci / cj).ln() * m[(j, i)].im;
        }
    }
    4.0 * total
}

/// Γ = −4 Σ_i k_i C_i log C_i for an arbitrary k.
pub fn gamma_rate_k(state: &SchmidtState, k: &[f64]) -> Result<f64> {
    if k.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            context: "k-vector length",
            expected: state.dim(),
            found: k.len(),
        });
    }
    Ok(-4.0
        * state
            .coefficients()
            .iter()
            .zip(k)
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, ki)| ki * c * c.ln())
            .sum::<f64>())
}

/// Ē_ψ = Σ_ij C_i C_j Re M_ij.
pub fn mean_energy(state: &SchmidtState, block: &SchmidtBlock) -> f64 {
    let c = state.coefficients();
    let m_r = block.real_part();
    c.dot(&(m_r * c))
}

/// Convenience: Γ(ψ, H) straight from a state and a Hamiltonian.
pub fn rate(psi: &PureState, h: &ComplexMatrix) -> Result<f64> {
    let state = schmidt_decompose(psi)?;
    Ok(gamma_rate(&state, &schmidt_block(h, &state)?))
}

/// Mean and variance of H on ψ, with the variance split into the part from
/// Re(H) and the part ⟨ψ|H_I H_Iᵀ|ψ⟩ from Im(H), both in the Schmidt basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub mean: f64,
    pub variance: f64,
    pub variance_real_part: f64,
    pub variance_imag_part: f64,
}

pub fn energy_stats(psi: &PureState, h: &ComplexMatrix) -> Result<EnergyStats> {
    energy_stats_in(&schmidt_decompose(psi)?, h)
}

/// [`energy_stats`] in the Schmidt frame of an already decomposed state.
pub fn energy_stats_in(state: &SchmidtState, h: &ComplexMatrix) -> Result<EnergyStats> {
    let frame = schmidt_frame(h, state)?;
    let n = frame.nrows();
    let mut psi = DVector::<f64>::zeros(n);
    for (i, &c) in state.coefficients().iter().enumerate() {
        psi[state.pair_index(i, i)] = c;
    }
    let h_r = frame.map(|z| z.re);
    let h_i = frame.map(|z| z.im);

    let h_r_psi = &h_r * &psi;
    let mean = psi.dot(&h_r_psi);
    let h_psi = &frame * psi.map(|x| Complex64::new(x, 0.0));
    let variance = (h_psi.norm_squared() - mean * mean).max(0.0);
    let variance_real_part = (h_r_psi.norm_squared() - mean * mean).max(0.0);
    let variance_imag_part = (h_i.transpose() * &psi).norm_squared();
    Ok(EnergyStats {
        mean,
        variance,
        variance_real_part,
        variance_imag_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_hermitian, random_state};

    const SKEWED_RATE: f64 = 1.318_334_746_401_731_4; // 4·√0.09·ln 3

    fn skewed() -> SchmidtState {
        SchmidtState::from_coefficients(&[0.9f64.sqrt(), 0.1f64.sqrt()], 2, 2).unwrap()
    }

    fn ket(n: usize, i: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn imaginary_coupling_reads_out_antisymmetric_block() {
        let (k00, k11) = (ket(4, 0), ket(4, 3));
        let i = Complex64::new(0.0, 1.0);
        let h = (&k00 * k11.adjoint() - &k11 * k00.adjoint()) * i;
        let block = schmidt_block(&h, &skewed()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((block.imag_part() - expected).amax() < 1e-15);
        assert!(block.real_part().amax() < 1e-15);
    }

    #[test]
    fn real_hamiltonian_has_no_imaginary_block() {
        let h = random_hermitian(4, 1).unwrap().map(|z| Complex64::new(z.re, 0.0));
        let block = schmidt_block(&h, &skewed()).unwrap();
        assert!(block.imag_part().amax() < 1e-15);
        assert_eq!(gamma_rate(&skewed(), &block), 0.0);
    }

    #[test]
    fn off_diagonal_support_gives_zero_block() {
        let (k01, k10) = (ket(4, 1), ket(4, 2));
        let h = &k01 * k10.adjoint() + &k10 * k01.adjoint();
        let block = schmidt_block(&h, &skewed()).unwrap();
        assert!(block.matrix().camax() < 1e-15);
    }

    #[test]
    fn uniform_coefficients_give_zero_rate() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let state = SchmidtState::from_coefficients(&[r, r], 2, 2).unwrap();
        let block = SchmidtBlock::from_imaginary(&DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0])).unwrap();
        assert_eq!(gamma_rate(&state, &block), 0.0);
    }

    #[test]
    fn skewed_example_rate() {
        let block = SchmidtBlock::from_imaginary(&DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        let state = skewed();
        assert!((gamma_rate(&state, &block) - SKEWED_RATE).abs() < 1e-14);
        let k = k_vector(&state, &block);
        assert!((gamma_rate_k(&state, k.as_slice()).unwrap() - SKEWED_RATE).abs() < 1e-14);
        // negating the block flips the sign exactly
        let neg = SchmidtBlock::new(-block.matrix().clone()).unwrap();
        assert_eq!(gamma_rate(&state, &neg), -gamma_rate(&state, &block));
    }

    #[test]
    fn gamma_rate_k_examples() {
        let state = skewed();
        assert_eq!(gamma_rate_k(&state, &[0.0, 0.0]).unwrap(), 0.0);
        let r = (1.0f64 / 3.0).sqrt();
        let uniform = SchmidtState::from_coefficients(&[r, r, r], 3, 3).unwrap();
        // Σ k_i C_i = 0
        assert!(gamma_rate_k(&uniform, &[1.0, -2.0, 1.0]).unwrap().abs() < 1e-15);
        assert!(matches!(gamma_rate_k(&state, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mean_energy_examples() {
        let state = SchmidtState::from_coefficients(&[1.0, 0.0], 2, 2).unwrap();
        let block = SchmidtBlock::new(ComplexMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(3.0, 0.0), Complex64::new(1.0, 2.0), Complex64::new(1.0, -2.0), Complex64::new(-5.0, 0.0)],
        ))
        .unwrap();
        assert!((mean_energy(&state, &block) - 3.0).abs() < 1e-15);
        let zero = SchmidtBlock::new(ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(mean_energy(&skewed(), &zero), 0.0);
    }

    #[test]
    fn mean_energy_matches_direct_expectation() {
        let psi = random_state(3, 4, 21).unwrap();
        let h = random_hermitian(12, 22).unwrap();
        let state = schmidt_decompose(&psi).unwrap();
        let block = schmidt_block(&h, &state).unwrap();
        let direct = psi.amplitudes().dotc(&(&h * psi.amplitudes())).re;
        assert!((mean_energy(&state, &block) - direct).abs() < 1e-10);
    }

    #[test]
    fn energy_stats_special_cases() {
        let state = skewed();
        let psi = state.to_pure_state();
        let real_h = random_hermitian(4, 5).unwrap().map(|z| Complex64::new(z.re, 0.0));
        assert!(energy_stats(&psi, &real_h).unwrap().variance_imag_part < 1e-15);

        // constant real part plus an imaginary coupling
        let i = Complex64::new(0.0, 1.0);
        let coupling = (ket(4, 0) * ket(4, 3).adjoint() - ket(4, 3) * ket(4, 0).adjoint()) * i;
        let h = ComplexMatrix::identity(4, 4) * Complex64::new(2.5, 0.0) + coupling;
        let stats = energy_stats(&psi, &h).unwrap();
        assert!(stats.variance_real_part < 1e-14);
        assert!((stats.variance - stats.variance_imag_part).abs() < 1e-14);
    }

    #[test]
    fn variance_decomposes_on_random_instance() {
        let psi = random_state(2, 3, 31).unwrap();
        let h = random_hermitian(6, 32).unwrap();
        let s = energy_stats(&psi, &h).unwrap();
        let direct_mean = psi.amplitudes().dotc(&(&h * psi.amplitudes())).re;
        let direct_var = (&h * psi.amplitudes()).norm_squared() - direct_mean * direct_mean;
        assert!((s.variance - direct_var).abs() < 1e-9);
        assert!((s.variance - s.variance_real_part - s.variance_imag_part).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_from_block_round_trips() {
        let psi = random_state(3, 3, 41).unwrap();
        let state = schmidt_decompose(&psi).unwrap();
        let m_i = DMatrix::from_row_slice(3, 3, &[0.0, 0.4, -1.0, -0.4, 0.0, 0.2, 1.0, -0.2, 0.0]);
        let block = SchmidtBlock::from_imaginary(&m_i).unwrap();
        let h = hamiltonian_from_block(&block, &state);
        let back = schmidt_block(&h, &state).unwrap();
        assert!((back.imag_part() - m_i).amax() < 1e-13);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = ComplexMatrix::identity(6, 6);
        assert!(matches!(schmidt_block(&h, &skewed()), Err(Error::DimensionMismatch { .. })));
    }
}
