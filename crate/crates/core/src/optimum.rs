//! Maximum of Γ(ψ, H) over Hamiltonians with unit energy variance, without
//! ancillas.
//!
//! Writing k = M_I·C, the constraint ΔE² = 1 reduces to Σk² = 1 with Σ C k = 0
//! automatically, and Γ = −4 Σ k_i C_i log C_i is linear in k. The optimum is
//! the normalized projection of (C_i log C_i) orthogonal to C, giving
//! max_H Γ = 2√f(p) where f is the variance of the surprisal −log p_i under
//! p_i = C_i².

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::qcore::{start_rng, ComplexMatrix, SchmidtState};
use crate::rate::{energy_stats_in, gamma_rate, hamiltonian_from_block, schmidt_block, SchmidtBlock};
use crate::{Error, Result};

const PROB_TOL: f64 = 1e-10;
/// λ₁ below this is treated as the uniform (rate-zero) case.
const DEGENERATE_LAMBDA1: f64 = 1e-12;

/// Var_{i~p}(−log p_i), clamped at zero.
pub fn surprisal_variance(p: &[f64]) -> Result<f64> {
    if p.iter().any(|x| !x.is_finite() || *x < -PROB_TOL) {
        return Err(Error::InvalidArgument("probabilities must be finite and nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}, expected 1")));
    }
    let support = || p.iter().copied().filter(|x| *x > 0.0);
    let mean: f64 = support().map(|x| x * x.ln()).sum();
    let var: f64 = support().map(|x| x * (x.ln() - mean).powi(2)).sum();
    Ok(var.max(0.0))
}

/// Stationary point of the Lagrangian for max Γ subject to Σk² = 1, Σ C k = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeSolution {
    pub k: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_rate: f64,
    /// Uniform coefficients: every k gives Γ = 0 and k is returned as zero.
    pub degenerate: bool,
}

impl LagrangeSolution {
    /// max_i |C_i log C_i + 2λ₁k_i − λ₂C_i|, the stationarity condition at the maximum.
    pub fn stationarity_residual(&self, state: &SchmidtState) -> f64 {
        state
            .coefficients()
            .iter()
            .zip(&self.k)
            .map(|(&c, &k)| (xlogx(c) + 2.0 * self.lambda1 * k - self.lambda2 * c).abs())
            .fold(0.0, f64::max)
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 { x * x.ln() } else { 0.0 }
}

/// Closed-form multipliers and optimal k:
/// λ₂ = Σ C_j² log C_j, λ₁ = ½ √(Σ C_i² (log C_i − λ₂)²), k_i = −C_i (log C_i − λ₂) / 2λ₁.
///
/// The positive-sign k solves the same stationarity system but minimizes Γ.
pub fn lagrange_solve(state: &SchmidtState) -> LagrangeSolution {
    let c = state.coefficients();
    let lambda2: f64 = c.iter().map(|&x| x * xlogx(x)).sum();
    // zero coefficients drop out through the C_i factor
    let centered: Vec<f64> = c.iter().map(|&x| if x > 0.0 { x * (x.ln() - lambda2) } else { 0.0 }).collect();
    let lambda1 = 0.5 * centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    if lambda1 < DEGENERATE_LAMBDA1 {
        return LagrangeSolution {
            k: vec![0.0; c.len()],
            lambda1,
            lambda2,
            max_rate: 0.0,
            degenerate: true,
        };
    }
    let k: Vec<f64> = centered.iter().map(|v| -v / (2.0 * lambda1)).collect();
    let max_rate = crate::rate::gamma_rate_k(state, &k).expect("k has the Schmidt dimension");
    LagrangeSolution {
        k,
        lambda1,
        lambda2,
        max_rate,
        degenerate: false,
    }
}

/// max_H Γ(ψ, H) = 2√f(C²) under unit energy variance.
pub fn max_rate(state: &SchmidtState) -> f64 {
    let p = state.probabilities();
    2.0 * surprisal_variance(&p).expect("Schmidt probabilities are normalized").sqrt()
}

/// Minimal-Frobenius-norm antisymmetric M_I with M_I·C = k (least squares
/// when k has a component along C, which no antisymmetric matrix can reach).
/// Returns the matrix and the residual ‖M_I·C − k‖.
pub fn antisymmetric_from_k(state: &SchmidtState, k: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let c = state.coefficients();
    if k.len() != c.len() {
        return Err(Error::DimensionMismatch {
            context: "k-vector length",
            expected: c.len(),
            found: k.len(),
        });
    }
    let k = DVector::from_column_slice(k);
    let cc = c.norm_squared();
    let k_perp = &k - c * (c.dot(&k) / cc);
    let m = (&k_perp * c.transpose() - c * k_perp.transpose()) / cc;
    let residual = (&m * c - &k).norm();
    Ok((m, residual))
}

/// Hamiltonian supported on the Schmidt-diagonal subspace that realizes `k`.
pub fn achieving_hamiltonian(state: &SchmidtState, k: &[f64]) -> Result<ComplexMatrix> {
    let (m_i, _) = antisymmetric_from_k(state, k)?;
    Ok(hamiltonian_from_block(&SchmidtBlock::from_imaginary(&m_i)?, state))
}

/// Schmidt coefficients (√γ, √((1−γ)/(d−1)), …) on a d×d system.
pub fn build_optimal_state(gamma: f64, d: usize) -> Result<SchmidtState> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} must lie in (0, 1)")));
    }
    if d < 2 {
        return Err(Error::InvalidArgument("optimal state needs d >= 2".into()));
    }
    let rest = ((1.0 - gamma) / (d - 1) as f64).sqrt();
    let mut coeffs = vec![rest; d];
    coeffs[0] = gamma.sqrt();
    SchmidtState::from_coefficients(&coeffs, d, d)
}

/// H = i(|00⟩⟨φ| − |φ⟩⟨00|) with |φ⟩ = Σ_{i≥1} |ii⟩/√(d−1), in the computational basis.
///
/// Paired with [`build_optimal_state`] at γ > 1/d this H *lowers* the
/// entanglement; [`optimal_design`] returns the oriented version.
pub fn build_optimal_hamiltonian(d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    if d_a != d_b {
        return Err(Error::DimensionMismatch {
            context: "optimal Hamiltonian needs d_A = d_B",
            expected: d_a,
            found: d_b,
        });
    }
    let d = d_a;
    if d < 2 {
        return Err(Error::InvalidArgument("optimal Hamiltonian needs d >= 2".into()));
    }
    let n = d * d;
    let amp = Complex64::new(0.0, 1.0 / ((d - 1) as f64).sqrt());
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 1..d {
        let ii = i * d + i;
        h[(0, ii)] = amp;
        h[(ii, 0)] = -amp;
    }
    Ok(h)
}

/// g(γ) = 2√(γ(1−γ)) log(γ(d−1)/(1−γ)), the rate along the optimal family.
pub fn gamma_curve(gamma: f64, d: usize) -> f64 {
    2.0 * (gamma * (1.0 - gamma)).sqrt() * (gamma * (d - 1) as f64 / (1.0 - gamma)).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOptimum {
    pub gamma: f64,
    pub rate: f64,
}

const GAMMA_GRID: usize = 10_000;

/// Maximizes [`gamma_curve`] over (0, 1): a 10⁴-point grid locates the peak,
/// golden-section search refines it within the neighbouring grid cells.
pub fn optimal_gamma(d: usize) -> Result<GammaOptimum> {
    if d < 2 {
        return Err(Error::InvalidArgument("optimal gamma needs d >= 2".into()));
    }
    let node = |k: usize| k as f64 / (GAMMA_GRID + 1) as f64;
    let best = (1..=GAMMA_GRID)
        .map(|k| (k, gamma_curve(node(k), d)))
        .fold((1, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let (mut lo, mut hi) = (node(best.0 - 1), node(best.0 + 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (gamma_curve(x1, d), gamma_curve(x2, d));
    while hi - lo > 1e-14 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = gamma_curve(x2, d);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = gamma_curve(x1, d);
        }
    }
    let gamma = 0.5 * (lo + hi);
    Ok(GammaOptimum {
        gamma,
        rate: gamma_curve(gamma, d).max(best.1),
    })
}

/// Optimal state and Hamiltonian pair for a d×d system.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalDesign {
    pub gamma: f64,
    pub d: usize,
    pub state: SchmidtState,
    /// Unit-variance on `state`, oriented so the rate is positive.
    pub hamiltonian: ComplexMatrix,
    pub rate: f64,
}

/// Builds the optimal pair at γ*: the optimal Hamiltonian scaled to unit
/// variance on the optimal state and, if needed, negated so Γ > 0.
pub fn optimal_design(d: usize) -> Result<OptimalDesign> {
    let opt = optimal_gamma(d)?;
    let state = build_optimal_state(opt.gamma, d)?;
    let mut h = build_optimal_hamiltonian(d, d)?;
    let var = energy_stats_in(&state, &h)?.variance;
    h *= Complex64::new(1.0 / var.sqrt(), 0.0);
    let mut rate = gamma_rate(&state, &schmidt_block(&h, &state)?);
    if rate < 0.0 {
        h = -h;
        rate = -rate;
    }
    Ok(OptimalDesign {
        gamma: opt.gamma,
        d,
        state,
        hamiltonian: h,
        rate,
    })
}

/// Oracle for the closed form: projected gradient ascent of −4 Σ k_i C_i log C_i
/// over {Σk² = 1, Σ C k = 0} from `trials` random starts. Returns the best value.
pub fn brute_force_max_k(state: &SchmidtState, trials: usize, seed: u64) -> f64 {
    let c = state.coefficients();
    let d = c.len();
    if d < 2 {
        return 0.0;
    }
    let w = DVector::from_iterator(d, c.iter().map(|&x| -4.0 * xlogx(x)));
    let project = |v: &DVector<f64>| v - c * c.dot(v);
    let w_scale = w.norm().max(1e-300);
    let mut best = f64::NEG_INFINITY;
    for t in 0..trials.max(1) {
        let mut rng = start_rng(seed, t);
        let mut k = project(&DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)));
        if k.norm() == 0.0 {
            continue;
        }
        k.unscale_mut(k.norm());
        for _ in 0..10_000 {
            let value = w.dot(&k);
            let tangent = project(&w) - &k * value;
            if tangent.norm() < 1e-15 * w_scale {
                break;
            }
            let mut next = project(&(&k + tangent * (0.5 / w_scale)));
            let norm = next.norm();
            if norm == 0.0 {
                break;
            }
            next.unscale_mut(norm);
            k = next;
        }
        best = best.max(w.dot(&k));
    }
    if best.is_finite() { best } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::{energy_stats_in, k_vector};

    const SKEWED_RATE: f64 = 1.318_334_746_401_731_4;
    // (0.3 ln 9)², evaluated directly
    const SKEWED_F: f64 = 0.434_501_625_892_529_4;

    fn skewed() -> SchmidtState {
        SchmidtState::from_coefficients(&[0.9f64.sqrt(), 0.1f64.sqrt()], 2, 2).unwrap()
    }

    fn uniform(d: usize) -> SchmidtState {
        let r = 1.0 / (d as f64).sqrt();
        SchmidtState::from_coefficients(&vec![r; d], d, d).unwrap()
    }

    #[test]
    fn surprisal_variance_examples() {
        assert!(surprisal_variance(&[0.25; 4]).unwrap() < 1e-15);
        assert_eq!(surprisal_variance(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((surprisal_variance(&[0.9, 0.1]).unwrap() - SKEWED_F).abs() < 1e-15);
        assert!(surprisal_variance(&[0.5, 0.6]).is_err());
    }

    #[test]
    fn lagrange_solution_on_skewed_state() {
        let state = skewed();
        let sol = lagrange_solve(&state);
        assert!(!sol.degenerate);
        assert!((sol.max_rate - SKEWED_RATE).abs() < 1e-12);
        assert!(sol.stationarity_residual(&state) < 1e-12);
        let norm: f64 = sol.k.iter().map(|k| k * k).sum();
        let ortho: f64 = sol.k.iter().zip(state.coefficients().iter()).map(|(k, c)| k * c).sum();
        assert!((norm - 1.0).abs() < 1e-12 && ortho.abs() < 1e-12);
    }

    #[test]
    fn opposite_k_is_the_minimum() {
        let state = skewed();
        let sol = lagrange_solve(&state);
        let flipped: Vec<f64> = sol.k.iter().map(|k| -k).collect();
        assert!((crate::rate::gamma_rate_k(&state, &flipped).unwrap() + SKEWED_RATE).abs() < 1e-12);
    }

    #[test]
    fn uniform_state_is_degenerate() {
        let sol = lagrange_solve(&uniform(3));
        assert!(sol.degenerate);
        assert_eq!(sol.max_rate, 0.0);
        assert!(sol.k.iter().all(|k| *k == 0.0));
    }

    #[test]
    fn max_rate_examples() {
        assert!(max_rate(&uniform(2)) < 1e-7);
        assert!((max_rate(&skewed()) - SKEWED_RATE).abs() < 1e-12);
        assert_eq!(max_rate(&SchmidtState::from_coefficients(&[1.0, 0.0], 2, 2).unwrap()), 0.0);
    }

    #[test]
    fn brute_force_agrees_with_closed_form() {
        assert!(brute_force_max_k(&uniform(4), 8, 1).abs() < 1e-8);
        assert!((brute_force_max_k(&skewed(), 8, 1) - SKEWED_RATE).abs() < 1e-6);
        let psi = crate::qcore::random_state(5, 5, 77).unwrap();
        let state = crate::qcore::schmidt_decompose(&psi).unwrap();
        assert!((brute_force_max_k(&state, 8, 2) - max_rate(&state)).abs() < 1e-6);
    }

    #[test]
    fn optimal_state_examples() {
        let s = build_optimal_state(0.25, 4).unwrap();
        assert!(s.coefficients().iter().all(|c| (c - 0.5).abs() < 1e-15));
        let s = build_optimal_state(0.9, 2).unwrap();
        assert!((s.coefficients()[0] - 0.9f64.sqrt()).abs() < 1e-15);
        assert!((s.coefficients()[1] - 0.1f64.sqrt()).abs() < 1e-15);
        for (g, d) in [(0.3, 3), (0.77, 5), (0.01, 7)] {
            assert!((build_optimal_state(g, d).unwrap().coefficients().norm_squared() - 1.0).abs() < 1e-12);
        }
        assert!(build_optimal_state(1.0, 2).is_err());
        assert!(build_optimal_state(0.0, 2).is_err());
    }

    #[test]
    fn optimal_hamiltonian_structure() {
        let h = build_optimal_hamiltonian(2, 2).unwrap();
        assert_eq!(h[(0, 3)], Complex64::new(0.0, 1.0));
        assert_eq!(h[(3, 0)], Complex64::new(0.0, -1.0));
        assert_eq!(h.iter().filter(|z| z.norm() > 0.0).count(), 2);
        for d in 2..6 {
            let h = build_optimal_hamiltonian(d, d).unwrap();
            assert!(crate::qcore::hermiticity_defect(&h) < 1e-14);
            assert!(h.trace().norm() < 1e-15);
            let block = schmidt_block(&h, &uniform(d)).unwrap();
            let first_row = block.imag_part().row(0).into_owned();
            for j in 1..d {
                assert!((first_row[j] - 1.0 / ((d - 1) as f64).sqrt()).abs() < 1e-15);
            }
        }
        assert!(build_optimal_hamiltonian(1, 1).is_err());
        assert!(build_optimal_hamiltonian(2, 3).is_err());
    }

    #[test]
    fn optimal_hamiltonian_has_unit_variance_on_optimal_state() {
        for (g, d) in [(0.9, 2), (0.6, 4)] {
            let state = build_optimal_state(g, d).unwrap();
            let h = build_optimal_hamiltonian(d, d).unwrap();
            let stats = energy_stats_in(&state, &h).unwrap();
            assert!((stats.variance - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_gamma_for_two_levels() {
        // grid oracle: 2·10⁵-point scan plus bounded refinement gave
        // γ* = 0.91677828, rate 1.32548684 nats
        let opt = optimal_gamma(2).unwrap();
        assert!((opt.gamma - 0.916_778_28).abs() < 1e-6);
        assert!((opt.rate - 1.325_486_84).abs() < 1e-8);
        assert_eq!(gamma_curve(0.5, 2), 0.0);
    }

    #[test]
    fn optimal_gamma_increases_with_dimension() {
        let rates: Vec<f64> = (2..=8).map(|d| optimal_gamma(d).unwrap().rate).collect();
        assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn optimal_gamma_matches_max_rate_of_its_state() {
        for d in 2..=6 {
            let opt = optimal_gamma(d).unwrap();
            let state = build_optimal_state(opt.gamma, d).unwrap();
            assert!((opt.rate - max_rate(&state)).abs() < 1e-8, "d = {d}");
        }
    }

    #[test]
    fn design_is_oriented_and_normalized() {
        let design = optimal_design(3).unwrap();
        assert!(design.rate > 0.0);
        assert!((design.rate - optimal_gamma(3).unwrap().rate).abs() < 1e-10);
        let stats = energy_stats_in(&design.state, &design.hamiltonian).unwrap();
        assert!((stats.variance - 1.0).abs() < 1e-12);
        // the formula as written points the other way
        let raw = build_optimal_hamiltonian(3, 3).unwrap();
        let raw_rate = gamma_rate(&design.state, &schmidt_block(&raw, &design.state).unwrap());
        assert!((raw_rate + design.rate).abs() < 1e-10);
    }

    #[test]
    fn achieving_hamiltonian_reaches_the_maximum() {
        let state = skewed();
        let sol = lagrange_solve(&state);
        let (m, residual) = antisymmetric_from_k(&state, &sol.k).unwrap();
        assert!(residual < 1e-14);
        assert!((&m + m.transpose()).amax() < 1e-15);
        let h = achieving_hamiltonian(&state, &sol.k).unwrap();
        let block = schmidt_block(&h, &state).unwrap();
        assert!((k_vector(&state, &block) - DVector::from_vec(sol.k.clone())).amax() < 1e-12);
        assert!((gamma_rate(&state, &block) - SKEWED_RATE).abs() < 1e-12);
        assert!((energy_stats_in(&state, &h).unwrap().variance_imag_part - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_k_drops_the_unreachable_component() {
        let state = skewed();
        let c = state.coefficients().clone();
        let (m, residual) = antisymmetric_from_k(&state, c.as_slice()).unwrap();
        assert!(m.amax() < 1e-15);
        assert!((residual - 1.0).abs() < 1e-12);
    }
}
