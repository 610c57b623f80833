//! Ground truth by brute force: the entanglement entropy of ρ_A(t) under
//! exact unitary evolution, differentiated numerically at t = 0, and energy
//! moments from dense products. Nothing here looks at Schmidt blocks.

use serde::{Deserialize, Serialize};

use crate::qcore::{reduced_density_a, spectral_entropy, ComplexMatrix, HermitianEigen, LogBase, PureState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdScheme {
    /// (E(h) − E(−h)) / 2h, error O(h²).
    #[default]
    Central,
    /// Four-point Richardson extrapolation of the central difference, error O(h⁴).
    Richardson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub step: f64,
    pub scheme: FdScheme,
    pub log_base: LogBase,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: 1e-5,
            scheme: FdScheme::Central,
            log_base: LogBase::Nat,
        }
    }
}

impl FdConfig {
    pub fn richardson(step: f64) -> Self {
        FdConfig {
            step,
            scheme: FdScheme::Richardson,
            log_base: LogBase::Nat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-8..=1e-2).contains(&self.step) {
            return Err(Error::InvalidArgument(format!(
                "finite-difference step {} outside [1e-8, 1e-2]",
                self.step
            )));
        }
        Ok(())
    }
}

/// E(t) = S(tr_B e^{−iHt}|ψ⟩⟨ψ|e^{iHt}) in nats.
struct EntropyTrajectory<'a> {
    psi: &'a PureState,
    eig: HermitianEigen,
}

impl EntropyTrajectory<'_> {
    fn at(&self, t: f64) -> Result<f64> {
        let evolved = PureState::normalized(self.psi.d_a(), self.psi.d_b(), self.eig.evolve(self.psi.amplitudes(), t))?;
        let rho_a = reduced_density_a(&evolved);
        // no positive floor: the x log x kink would otherwise leak into differences
        spectral_entropy(rho_a.symmetric_eigenvalues().iter().copied(), 0.0)
    }
}

/// dE/dt at t = 0 by finite differences, reported in `cfg.log_base`.
pub fn fd_rate(psi: &PureState, h: &ComplexMatrix, cfg: &FdConfig) -> Result<f64> {
    cfg.validate()?;
    let n = psi.d_a() * psi.d_b();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian size vs state",
            expected: n,
            found: h.nrows(),
        });
    }
    let traj = EntropyTrajectory {
        psi,
        eig: HermitianEigen::new(h)?,
    };
    let step = cfg.step;
    let central = |s: f64| -> Result<f64> { Ok((traj.at(s)? - traj.at(-s)?) / (2.0 * s)) };
    let nats = match cfg.scheme {
        FdScheme::Central => central(step)?,
        FdScheme::Richardson => (4.0 * central(step)? - central(2.0 * step)?) / 3.0,
    };
    Ok(cfg.log_base.from_nats(nats))
}

/// ⟨ψ|H|ψ⟩ and ⟨ψ|H²|ψ⟩ − ⟨ψ|H|ψ⟩² by dense products.
pub fn direct_stats(psi: &PureState, h: &ComplexMatrix) -> Result<(f64, f64)> {
    let n = psi.amplitudes().len();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian size vs state",
            expected: n,
            found: h.nrows(),
        });
    }
    let h_psi = h * psi.amplitudes();
    let mean = psi.amplitudes().dotc(&h_psi).re;
    Ok((mean, h_psi.norm_squared() - mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_hermitian, random_state, SchmidtState};
    use nalgebra::DVector;
    use num_complex::Complex64;

    const SKEWED_RATE: f64 = 1.318_334_746_401_731_4;

    fn skewed_pair() -> (PureState, ComplexMatrix) {
        let psi = SchmidtState::from_coefficients(&[0.9f64.sqrt(), 0.1f64.sqrt()], 2, 2)
            .unwrap()
            .to_pure_state();
        // Im⟨00|H|11⟩ = −1
        let mut h = ComplexMatrix::zeros(4, 4);
        h[(0, 3)] = Complex64::new(0.0, -1.0);
        h[(3, 0)] = Complex64::new(0.0, 1.0);
        (psi, h)
    }

    #[test]
    fn skewed_example_at_two_steps() {
        let (psi, h) = skewed_pair();
        for step in [1e-5, 1e-4] {
            let r = fd_rate(&psi, &h, &FdConfig { step, ..Default::default() }).unwrap();
            assert!((r - SKEWED_RATE).abs() < 1e-6, "step {step}: {r}");
            let r = fd_rate(&psi, &h, &FdConfig::richardson(step)).unwrap();
            assert!((r - SKEWED_RATE).abs() < 1e-8, "richardson step {step}: {r}");
        }
    }

    #[test]
    fn real_hamiltonian_in_schmidt_basis_generates_nothing() {
        let (psi, _) = skewed_pair();
        let h = random_hermitian(4, 3).unwrap().map(|z| Complex64::new(z.re, 0.0));
        assert!(fd_rate(&psi, &h, &FdConfig::default()).unwrap().abs() < 1e-6);
    }

    #[test]
    fn maximally_entangled_state_is_stationary() {
        let r = 1.0 / 3f64.sqrt();
        let psi = SchmidtState::from_coefficients(&[r, r, r], 3, 3).unwrap().to_pure_state();
        let h = random_hermitian(9, 4).unwrap();
        assert!(fd_rate(&psi, &h, &FdConfig::default()).unwrap().abs() < 1e-6);
    }

    #[test]
    fn negated_hamiltonian_negates_rate() {
        let psi = random_state(2, 3, 7).unwrap();
        let h = random_hermitian(6, 8).unwrap();
        let cfg = FdConfig::default();
        let a = fd_rate(&psi, &h, &cfg).unwrap();
        let b = fd_rate(&psi, &(-h), &cfg).unwrap();
        assert!((a + b).abs() < 2e-6);
    }

    #[test]
    fn bits_are_nats_over_ln2() {
        let (psi, h) = skewed_pair();
        let nat = fd_rate(&psi, &h, &FdConfig::default()).unwrap();
        let bits = fd_rate(&psi, &h, &FdConfig { log_base: LogBase::Two, ..Default::default() }).unwrap();
        assert!((bits - nat / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let (psi, h) = skewed_pair();
        let cfg = FdConfig { step: 0.5, ..Default::default() };
        assert!(matches!(fd_rate(&psi, &h, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn direct_stats_examples() {
        let psi = random_state(2, 2, 1).unwrap();
        let (mean, var) = direct_stats(&psi, &ComplexMatrix::identity(4, 4)).unwrap();
        assert!((mean - 1.0).abs() < 1e-15 && var.abs() < 1e-15);

        let h = random_hermitian(4, 2).unwrap();
        let eig = HermitianEigen::new(&h).unwrap();
        let v: DVector<Complex64> = eig.vectors().column(1).into_owned();
        let eigenstate = PureState::normalized(2, 2, v).unwrap();
        let (mean, var) = direct_stats(&eigenstate, &h).unwrap();
        assert!((mean - eig.values()[1]).abs() < 1e-12);
        assert!(var.abs() < 1e-12);
    }
}
