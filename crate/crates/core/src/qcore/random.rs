use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, PureState};
use crate::{Error, Result};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for start `index` of a multi-start run, so results
/// do not depend on the order starts are executed in.
pub fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Standard complex Gaussian, E|z|² = 1.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_state_with<R: Rng + ?Sized>(rng: &mut R, d_a: usize, d_b: usize) -> Result<PureState> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::InvalidArgument("subsystem dimensions must be at least 1".into()));
    }
    let amps = DVector::from_fn(d_a * d_b, |_, _| complex_gaussian(rng));
    PureState::normalized(d_a, d_b, amps)
}

/// Haar-distributed pure state on C^{d_A} ⊗ C^{d_B}.
pub fn random_state(d_a: usize, d_b: usize, seed: u64) -> Result<PureState> {
    random_state_with(&mut seeded_rng(seed), d_a, d_b)
}

pub fn random_hermitian_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
    }
    let a = ComplexMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    // entrywise (A_ij + conj A_ji)/2 is exactly Hermitian in floating point
    Ok(ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5))
}

/// (A + A†)/2 for a complex Gaussian A.
pub fn random_hermitian(n: usize, seed: u64) -> Result<ComplexMatrix> {
    random_hermitian_with(&mut seeded_rng(seed), n)
}

pub fn random_unitary_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
    }
    let a = ComplexMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    // fix the phases of R's diagonal so Q is Haar distributed
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let mut col = q.column_mut(j);
            col *= d / d.norm();
        }
    }
    Ok(q)
}

/// Haar-random n×n unitary.
pub fn random_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    random_unitary_with(&mut seeded_rng(seed), n)
}
