//! Ancilla-assisted rates. Alice holds A'A and Bob holds BB'; the state is
//! Σ C_{αβ} |α⟩_{A'}|β⟩_A|β⟩_B|α⟩_{B'} and Hamiltonians act as
//! I_{A'} ⊗ H_AB ⊗ I_{B'}. Only the antisymmetric block
//! G_{βδ} = Im⟨ββ|H_AB|δδ⟩ enters the rate.
//!
//! With K = C∘log C and A = CᵀK − KᵀC the rate is 2 tr((KᵀC − CᵀK)G) = 2⟨A, G⟩
//! and the energy variance is ‖CG‖². The maximum over G is 2Λ with
//! Λ² = ⟨A, 𝒬⁻¹(A)⟩ where 𝒬(X) = (CᵀC·X + X·CᵀC)/2.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::optimum::{build_optimal_state, optimal_gamma};
use crate::oracle::{fd_rate, FdConfig};
use crate::qcore::{ensure_hermitian, kron, start_rng, ComplexMatrix, PureState, HERMITIAN_TOL};
use crate::{Error, Result};

/// Default cap on d_{A'}·d_A·d_B·d_{B'} for assembled systems.
pub const DEFAULT_DIM_CAP: usize = 4096;
const COEFF_NORM_TOL: f64 = 1e-12;
const SINGULAR_CONDITION: f64 = 1e12;

fn xlogx(x: f64) -> f64 {
    if x > 0.0 { x * x.ln() } else { 0.0 }
}

fn entropy_matrix(c: &DMatrix<f64>) -> DMatrix<f64> {
    c.map(xlogx)
}

fn commutator_a(c: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    let ctk = c.transpose() * k;
    &ctk - ctk.transpose()
}

/// Nonnegative coefficient matrix C (d_{A'} × d_A) with unit Frobenius norm,
/// together with K = C∘log C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffsRepr", into = "CoeffsRepr")]
pub struct AncillaCoeffs {
    c: DMatrix<f64>,
    k: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffsRepr {
    c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<Vec<Vec<f64>>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("ragged coefficient rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl From<AncillaCoeffs> for CoeffsRepr {
    fn from(a: AncillaCoeffs) -> Self {
        CoeffsRepr {
            c: to_rows(&a.c),
            k: Some(to_rows(&a.k)),
        }
    }
}

impl TryFrom<CoeffsRepr> for AncillaCoeffs {
    type Error = Error;

    fn try_from(r: CoeffsRepr) -> Result<Self> {
        let coeffs = AncillaCoeffs::new(from_rows(&r.c)?)?;
        if let Some(k) = r.k {
            let k = from_rows(&k)?;
            if k.shape() != coeffs.k.shape() || (&k - &coeffs.k).amax() > 1e-12 {
                return Err(Error::InvalidArgument("stored K does not match C log C".into()));
            }
        }
        Ok(coeffs)
    }
}

impl AncillaCoeffs {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() == 0 || c.ncols() == 0 {
            return Err(Error::InvalidArgument("empty coefficient matrix".into()));
        }
        if c.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument("coefficients must be finite and nonnegative".into()));
        }
        let norm = c.norm();
        if (norm - 1.0).abs() > COEFF_NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let k = entropy_matrix(&c);
        Ok(AncillaCoeffs { c, k })
    }

    /// Rescales to unit Frobenius norm first.
    pub fn normalized(c: DMatrix<f64>) -> Result<Self> {
        let norm = c.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("coefficient matrix has zero or non-finite norm".into()));
        }
        Self::new(c / norm)
    }

    /// d_{A'} = 1 case: a single row of Schmidt coefficients.
    pub fn from_schmidt(coeffs: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(1, coeffs.len(), coeffs))
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn d_ancilla(&self) -> usize {
        self.c.nrows()
    }

    pub fn d_a(&self) -> usize {
        self.c.ncols()
    }

    /// A = CᵀK − KᵀC.
    pub fn commutator(&self) -> DMatrix<f64> {
        commutator_a(&self.c, &self.k)
    }

    /// CᵀC.
    pub fn gram(&self) -> DMatrix<f64> {
        self.c.transpose() * &self.c
    }
}

/// Real antisymmetric d_A × d_A matrix, stored as its strict upper triangle in
/// row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GRepr")]
pub struct GBlock {
    dim: usize,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct GRepr {
    dim: usize,
    upper: Vec<f64>,
}

impl TryFrom<GRepr> for GBlock {
    type Error = Error;

    fn try_from(r: GRepr) -> Result<Self> {
        GBlock::from_upper(r.dim, r.upper)
    }
}

fn pair_count(dim: usize) -> usize {
    dim * dim.saturating_sub(1) / 2
}

fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |i| (i + 1..dim).map(move |j| (i, j)))
}

impl GBlock {
    pub fn zeros(dim: usize) -> Self {
        GBlock {
            dim,
            upper: vec![0.0; pair_count(dim)],
        }
    }

    pub fn from_upper(dim: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != pair_count(dim) {
            return Err(Error::DimensionMismatch {
                context: "strict upper triangle of G",
                expected: pair_count(dim),
                found: upper.len(),
            });
        }
        if upper.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("G entries must be finite".into()));
        }
        Ok(GBlock { dim, upper })
    }

    /// Projects onto (M − Mᵀ)/2 and returns the discarded part's norm ‖M + Mᵀ‖_F / 2.
    pub fn antisymmetric_part(m: &DMatrix<f64>) -> Result<(Self, f64)> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "G must be square",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let defect = (m + m.transpose()).norm() / 2.0;
        let upper = pairs(m.nrows()).map(|(i, j)| 0.5 * (m[(i, j)] - m[(j, i)])).collect();
        Ok((GBlock::from_upper(m.nrows(), upper)?, defect))
    }

    /// Requires ‖M + Mᵀ‖_F / 2 ≤ 1e-12·max(1, ‖M‖_F).
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (g, defect) = Self::antisymmetric_part(m)?;
        if defect > 1e-12 * m.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("G is not antisymmetric (defect {defect:.3e})")));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for ((i, j), &x) in pairs(self.dim).zip(&self.upper) {
            m[(i, j)] = x;
            m[(j, i)] = -x;
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        GBlock {
            dim: self.dim,
            upper: self.upper.iter().map(|x| x * s).collect(),
        }
    }
}

fn check_g(coeffs: &AncillaCoeffs, g: &GBlock) -> Result<()> {
    if g.dim() != coeffs.d_a() {
        return Err(Error::DimensionMismatch {
            context: "G dimension against d_A",
            expected: coeffs.d_a(),
            found: g.dim(),
        });
    }
    Ok(())
}

/// I_{A'} ⊗ H_AB ⊗ I_{B'}.
pub fn build_structured_hamiltonian(h_ab: &ComplexMatrix, d_anc_a: usize, d_anc_b: usize) -> Result<ComplexMatrix> {
    if !h_ab.is_square() {
        return Err(Error::DimensionMismatch {
            context: "H_AB must be square",
            expected: h_ab.nrows(),
            found: h_ab.ncols(),
        });
    }
    if d_anc_a == 0 || d_anc_b == 0 {
        return Err(Error::InvalidArgument("ancilla dimensions must be positive".into()));
    }
    ensure_hermitian(h_ab, HERMITIAN_TOL)?;
    let left = ComplexMatrix::identity(d_anc_a, d_anc_a);
    let right = ComplexMatrix::identity(d_anc_b, d_anc_b);
    Ok(kron(&kron(&left, h_ab), &right))
}

/// Checks that `h` on A'⊗A⊗B⊗B' acts trivially on both ancillas: elements
/// vanish unless ancilla labels match, and every ancilla sector carries the
/// same A⊗B block.
pub fn validate_structure(h: &ComplexMatrix, d_anc_a: usize, d_a: usize, d_b: usize, d_anc_b: usize) -> Result<()> {
    let n = d_anc_a * d_a * d_b * d_anc_b;
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "structured Hamiltonian size",
            expected: n,
            found: h.nrows(),
        });
    }
    let split = |r: usize| {
        let b_anc = r % d_anc_b;
        let rest = r / d_anc_b;
        let b = rest % d_b;
        let rest = rest / d_b;
        (rest / d_a, rest % d_a, b, b_anc)
    };
    let index = |a_anc: usize, a: usize, b: usize, b_anc: usize| ((a_anc * d_a + a) * d_b + b) * d_anc_b + b_anc;
    let mut violation: f64 = 0.0;
    for r in 0..n {
        let (ra_anc, ra, rb, rb_anc) = split(r);
        for c in 0..n {
            let (ca_anc, ca, cb, cb_anc) = split(c);
            let expected = if ra_anc == ca_anc && rb_anc == cb_anc {
                h[(index(0, ra, rb, 0), index(0, ca, cb, 0))]
            } else {
                Complex64::new(0.0, 0.0)
            };
            violation = violation.max((h[(r, c)] - expected).norm());
        }
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if violation > 1e-12 * scale {
        return Err(Error::NotStructured { violation });
    }
    Ok(())
}

/// 2 tr((KᵀC − CᵀK)G).
pub fn ancilla_objective(coeffs: &AncillaCoeffs, g: &GBlock) -> Result<f64> {
    check_g(coeffs, g)?;
    let (c, k) = (coeffs.c(), coeffs.k());
    let f = k.transpose() * c - c.transpose() * k;
    Ok(2.0 * (f * g.to_matrix()).trace())
}

/// 2 Σ_α Σ_{β,δ} C_{αβ} C_{αδ} log(C_{αβ}/C_{αδ}) G_{δβ}, zero terms skipped.
pub fn ancilla_objective_index(coeffs: &AncillaCoeffs, g: &GBlock) -> Result<f64> {
    check_g(coeffs, g)?;
    let c = coeffs.c();
    let gm = g.to_matrix();
    let mut sum = 0.0;
    for alpha in 0..c.nrows() {
        for beta in 0..c.ncols() {
            for delta in 0..c.ncols() {
                let (x, y) = (c[(alpha, beta)], c[(alpha, delta)]);
                if x > 0.0 && y > 0.0 {
                    sum += x * y * (x / y).ln() * gm[(delta, beta)];
                }
            }
        }
    }
    Ok(2.0 * sum)
}

/// ‖CG‖_F², the energy variance of the assembled pair.
pub fn variance_constraint(coeffs: &AncillaCoeffs, g: &GBlock) -> Result<f64> {
    check_g(coeffs, g)?;
    Ok((coeffs.c() * g.to_matrix()).norm_squared())
}

/// Σ_{α,j} (Σ_β C_{αβ} G_{βj})².
pub fn variance_constraint_index(coeffs: &AncillaCoeffs, g: &GBlock) -> Result<f64> {
    check_g(coeffs, g)?;
    let c = coeffs.c();
    let gm = g.to_matrix();
    let mut sum = 0.0;
    for alpha in 0..c.nrows() {
        for j in 0..c.ncols() {
            let inner: f64 = (0..c.ncols()).map(|beta| c[(alpha, beta)] * gm[(beta, j)]).sum();
            sum += inner * inner;
        }
    }
    Ok(sum)
}

/// Eigendecomposition of CᵀC with the regularization checks applied.
struct Gram {
    p: DVector<f64>,
    v: DMatrix<f64>,
    eps: f64,
}

impl Gram {
    fn new(c: &DMatrix<f64>, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("regularization {eps} must be finite and >= 0")));
        }
        let eig = SymmetricEigen::new(c.transpose() * c);
        let p = eig.eigenvalues.map(|x| x.max(0.0));
        if eps == 0.0 {
            let (lo, hi) = (p.min(), p.max());
            let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            if condition > SINGULAR_CONDITION {
                return Err(Error::Singular { condition });
            }
        }
        Ok(Gram {
            p,
            v: eig.eigenvectors,
            eps,
        })
    }

    /// 𝒬_ε⁻¹(A) with 𝒬_ε(X) = ((P + εI)X + X(P + εI))/2.
    fn lyapunov_inverse(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut t = self.v.transpose() * a * &self.v;
        for ((i, j), x) in t.iter_mut().enumerate().map(|(n, x)| ((n % self.p.len(), n / self.p.len()), x)) {
            *x *= 2.0 / (self.p[i] + self.p[j] + 2.0 * self.eps);
        }
        &self.v * t * self.v.transpose()
    }

    /// A (P + εI)⁻¹.
    fn right_inverse(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let inv = DMatrix::from_diagonal(&self.p.map(|x| 1.0 / (x + self.eps)));
        a * &self.v * inv * self.v.transpose()
    }
}

fn lambda_sq_raw(c: &DMatrix<f64>, eps: f64) -> Result<f64> {
    let a = commutator_a(c, &entropy_matrix(c));
    let gram = Gram::new(c, eps)?;
    Ok(a.dot(&gram.lyapunov_inverse(&a)).max(0.0))
}

/// Λ²(C, ε) = ⟨A, 𝒬_ε⁻¹(A)⟩, the squared half-maximum of the rate at fixed C.
/// Nonincreasing in ε; ε = 0 requires CᵀC with condition number ≤ 1e12.
pub fn lambda_sq(coeffs: &AncillaCoeffs, regularization: f64) -> Result<f64> {
    lambda_sq_raw(coeffs.c(), regularization)
}

/// tr(AᵀA (CᵀC + εI)⁻¹). An upper bound on [`lambda_sq`], strict unless A is
/// confined to an eigenspace of CᵀC.
pub fn lambda_sq_one_sided(coeffs: &AncillaCoeffs, regularization: f64) -> Result<f64> {
    let a = coeffs.commutator();
    let gram = Gram::new(coeffs.c(), regularization)?;
    Ok((a.transpose() * gram.right_inverse(&a)).trace())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRecovery {
    pub g: GBlock,
    /// ‖Y + Yᵀ‖_F / 2 for the one-sided candidate Y = A(CᵀC + εI)⁻¹/λ₁.
    pub one_sided_defect: f64,
    /// ‖A − λ₁(CᵀC·G + G·CᵀC)/2‖_F.
    pub stationarity_residual: f64,
}

/// G = 𝒬_ε⁻¹(A)/λ₁. With λ₁ = √Λ² this has ‖CG‖_F = 1 (up to the ε bias)
/// and objective 2λ₁.
pub fn recover_g(coeffs: &AncillaCoeffs, lambda1: f64, regularization: f64) -> Result<GRecovery> {
    if !(lambda1 > 0.0 && lambda1.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda1 = {lambda1} must be positive")));
    }
    let a = coeffs.commutator();
    let gram = Gram::new(coeffs.c(), regularization)?;
    let x = gram.lyapunov_inverse(&a) / lambda1;
    let (g, _) = GBlock::antisymmetric_part(&x)?;
    let y = gram.right_inverse(&a) / lambda1;
    let one_sided_defect = (&y + y.transpose()).norm() / 2.0;
    let gm = g.to_matrix();
    let p = coeffs.gram();
    let stationarity_residual = (&a - (&p * &gm + &gm * &p) * (lambda1 / 2.0)).norm();
    Ok(GRecovery {
        g,
        one_sided_defect,
        stationarity_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerConfig {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop when the ascent direction has norm ≤ tol·max(1, ‖a‖).
    pub tol: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            starts: 4,
            seed: 0,
            max_iter: 200_000,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerOptimum {
    pub value: f64,
    pub g: GBlock,
    pub best_start: usize,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Maximizes [`ancilla_objective`] over antisymmetric G with ‖CG‖_F = 1 at
/// fixed C, by gradient ascent on the strict upper triangle with
/// renormalization after each step.
pub fn inner_opt_over_g(coeffs: &AncillaCoeffs, starts: usize, seed: u64) -> Result<InnerOptimum> {
    inner_opt_over_g_with(
        coeffs,
        &InnerConfig {
            starts,
            seed,
            ..InnerConfig::default()
        },
    )
}

pub fn inner_opt_over_g_with(coeffs: &AncillaCoeffs, cfg: &InnerConfig) -> Result<InnerOptimum> {
    if cfg.starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let d = coeffs.d_a();
    let m = pair_count(d);
    let c = coeffs.c();
    let a_mat = coeffs.commutator();
    // objective = aᵀx, variance = xᵀQx in upper-triangle coordinates
    let a = DVector::from_iterator(m, pairs(d).map(|(i, j)| 4.0 * a_mat[(i, j)]));
    let mut b = DMatrix::zeros(c.nrows() * d, m);
    for (p, (i, j)) in pairs(d).enumerate() {
        let mut e = DMatrix::zeros(d, d);
        e[(i, j)] = 1.0;
        e[(j, i)] = -1.0;
        b.set_column(p, &DVector::from_column_slice((c * e).as_slice()));
    }
    let q = b.transpose() * &b;
    let a_norm = a.norm();
    let gtol = cfg.tol * a_norm.max(1.0);
    let scale = |x: &DVector<f64>| x.dot(&(&q * x)).max(0.0).sqrt();

    let mut best: Option<InnerOptimum> = None;
    let mut total_iters = 0;
    let mut best_gradient = f64::INFINITY;
    for s in 0..cfg.starts {
        let mut rng = start_rng(cfg.seed, s);
        let mut x = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sx = scale(&x);
        if m == 0 || sx == 0.0 {
            if m == 0 || a_norm == 0.0 {
                best.get_or_insert(InnerOptimum {
                    value: 0.0,
                    g: GBlock::zeros(d),
                    best_start: s,
                    iterations: 0,
                    gradient_norm: 0.0,
                });
            }
            continue;
        }
        x /= sx;
        // the objective is odd in G
        if a.dot(&x) < 0.0 {
            x = -x;
        }
        let mut value = a.dot(&x);
        let mut step = 1.0 / (1.0 + q.norm());
        let mut grad = &a - &q * &x * value;
        let mut iters = 0;
        while iters < cfg.max_iter && grad.norm() > gtol && step > 1e-300 {
            iters += 1;
            let mut trial = &x + &grad * step;
            let st = scale(&trial);
            if st == 0.0 {
                step *= 0.5;
                continue;
            }
            trial /= st;
            let v = a.dot(&trial);
            if v >= value {
                x = trial;
                value = v;
                grad = &a - &q * &x * value;
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        total_iters += iters;
        let gn = grad.norm();
        best_gradient = best_gradient.min(gn);
        if gn > gtol {
            continue;
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(InnerOptimum {
                value,
                g: GBlock::from_upper(d, x.iter().copied().collect())?,
                best_start: s,
                iterations: iters,
                gradient_norm: gn,
            });
        }
    }
    best.ok_or(Error::NoConvergence {
        starts: cfg.starts,
        iterations: total_iters,
        best_gradient,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupConfig {
    pub starts: usize,
    pub seed: u64,
    /// Tikhonov ε per refinement round.
    pub eps_schedule: Vec<f64>,
    /// Entry floor δ per refinement round.
    pub delta_schedule: Vec<f64>,
    pub fd_step: f64,
    /// Iteration cap per round and start.
    pub max_iter: usize,
    /// Projected-gradient norm counted as converged.
    pub grad_tol: f64,
    /// Cross-check the result with the finite-difference oracle.
    pub arbitrate: bool,
    pub dim_cap: usize,
}

impl Default for SupConfig {
    fn default() -> Self {
        SupConfig {
            starts: 8,
            seed: 0,
            eps_schedule: vec![1e-4, 1e-6, 1e-8, 1e-10],
            delta_schedule: vec![1e-5, 1e-6, 1e-7, 1e-8],
            fd_step: 1e-6,
            max_iter: 2_000,
            grad_tol: 1e-7,
            arbitrate: true,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupDiagnostics {
    pub eps_schedule: Vec<f64>,
    pub delta_schedule: Vec<f64>,
    pub fd_step: f64,
    pub best_start: usize,
    pub start_values: Vec<f64>,
    pub iterations: Vec<usize>,
    pub gradient_norms: Vec<f64>,
    /// ‖C*G*‖_F² and 2⟨A, G*⟩ for the recovered G.
    pub g_variance: f64,
    pub g_objective: f64,
    pub stationarity_residual: f64,
    /// Finite-difference rate of the assembled pair, when within the cap.
    pub arbitrated_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaOptimum {
    pub d_a: usize,
    pub d_ancilla: usize,
    /// Best 2√Λ² found, in nats.
    pub value: f64,
    pub lambda1: f64,
    pub c_star: AncillaCoeffs,
    pub g_star: GBlock,
    pub starts: usize,
    pub converged_fraction: f64,
    pub regularization: f64,
    pub diagnostics: SupDiagnostics,
}

/// Λ² of C/‖C‖.
fn scaled_objective(c: &DMatrix<f64>, eps: f64) -> f64 {
    lambda_sq_raw(&(c / c.norm()), eps).unwrap_or(f64::NEG_INFINITY)
}

fn project_to_feasible(c: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let clamped = c.map(|x| x.max(delta));
    let n = clamped.norm();
    clamped / n
}

struct RoundResult {
    c: DMatrix<f64>,
    value: f64,
    gradient_norm: f64,
    iterations: usize,
}

fn fd_gradient(c: &DMatrix<f64>, eps: f64, h: f64, delta: f64) -> DMatrix<f64> {
    let f0 = scaled_objective(c, eps);
    let mut grad = DMatrix::zeros(c.nrows(), c.ncols());
    for idx in 0..c.len() {
        let mut plus = c.clone();
        plus[idx] += h;
        let fp = scaled_objective(&plus, eps);
        grad[idx] = if c[idx] - h >= delta {
            let mut minus = c.clone();
            minus[idx] -= h;
            (fp - scaled_objective(&minus, eps)) / (2.0 * h)
        } else {
            (fp - f0) / h
        };
    }
    grad
}

/// Projected gradient with an active set at the floor: components pushing a
/// floored entry further down are dropped.
fn projected_direction(c: &DMatrix<f64>, grad: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let mut t = grad - c * c.dot(grad);
    for (ti, ci) in t.iter_mut().zip(c.iter()) {
        if *ci <= delta * (1.0 + 1e-12) && *ti < 0.0 {
            *ti = 0.0;
        }
    }
    t
}

fn ascend(c0: DMatrix<f64>, eps: f64, delta: f64, cfg: &SupConfig) -> RoundResult {
    let mut c = project_to_feasible(&c0, delta);
    let mut value = scaled_objective(&c, eps);
    let mut step = 0.1;
    let mut dir = projected_direction(&c, &fd_gradient(&c, eps, cfg.fd_step, delta), delta);
    let mut iterations = 0;
    while iterations < cfg.max_iter && dir.norm() > cfg.grad_tol && step > 1e-14 {
        iterations += 1;
        let trial = project_to_feasible(&(&c + &dir * (step / dir.norm().max(1.0))), delta);
        let v = scaled_objective(&trial, eps);
        if v > value {
            c = trial;
            value = v;
            step = (step * 1.5).min(1.0);
            dir = projected_direction(&c, &fd_gradient(&c, eps, cfg.fd_step, delta), delta);
        } else {
            step *= 0.5;
        }
    }
    RoundResult {
        c,
        value,
        gradient_norm: dir.norm(),
        iterations,
    }
}

fn embedded_start(d_a: usize, d_anc: usize, delta: f64) -> Result<DMatrix<f64>> {
    let opt = optimal_gamma(d_a)?;
    let row = build_optimal_state(opt.gamma, d_a)?;
    let mut c = DMatrix::from_element(d_anc, d_a, delta);
    for (j, x) in row.coefficients().iter().enumerate() {
        c[(0, j)] = *x;
    }
    Ok(c)
}

/// Multi-start search for sup_C 2√Λ²(C). Start 0 embeds the no-ancilla
/// optimum in the first row of C; the others are random. Each start is
/// refined over the ε/δ schedule, restarting every round from the better of
/// its initial point and its previous round's end. Ties go to the lowest
/// start index.
pub fn sup_search(d_a: usize, d_anc: usize, starts: usize, seed: u64) -> Result<AncillaOptimum> {
    sup_search_with(
        d_a,
        d_anc,
        &SupConfig {
            starts,
            seed,
            ..SupConfig::default()
        },
    )
}

pub fn sup_search_with(d_a: usize, d_anc: usize, cfg: &SupConfig) -> Result<AncillaOptimum> {
    if d_a < 2 || d_anc < 1 {
        return Err(Error::InvalidArgument(format!("need d_A >= 2 and d_A' >= 1, got ({d_a}, {d_anc})")));
    }
    if cfg.starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    if cfg.eps_schedule.is_empty() || cfg.eps_schedule.len() != cfg.delta_schedule.len() {
        return Err(Error::InvalidArgument("eps and delta schedules must be nonempty and of equal length".into()));
    }
    if cfg.eps_schedule.iter().chain(&cfg.delta_schedule).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("schedule entries must be positive".into()));
    }
    if !(cfg.fd_step > 0.0 && cfg.fd_step < 1e-2) {
        return Err(Error::InvalidArgument(format!("gradient step {} outside (0, 1e-2)", cfg.fd_step)));
    }
    let eps_last = *cfg.eps_schedule.last().expect("nonempty");

    let mut results = Vec::with_capacity(cfg.starts);
    for s in 0..cfg.starts {
        let initial = if s == 0 {
            embedded_start(d_a, d_anc, cfg.delta_schedule[0])?
        } else {
            let mut rng = start_rng(cfg.seed, s);
            DMatrix::from_fn(d_anc, d_a, |_, _| rng.sample::<f64, _>(StandardNormal).abs())
        };
        let mut current = initial.clone();
        let mut iterations = 0;
        let mut last = None;
        for (&eps, &delta) in cfg.eps_schedule.iter().zip(&cfg.delta_schedule) {
            let from_initial = project_to_feasible(&initial, delta);
            if scaled_objective(&from_initial, eps) > scaled_objective(&current, eps) {
                current = from_initial;
            }
            let round = ascend(current, eps, delta, cfg);
            iterations += round.iterations;
            current = round.c.clone();
            last = Some(round);
        }
        let round = last.expect("at least one round");
        results.push((round.value, round.gradient_norm, iterations, round.c));
    }

    let best_start = (0..results.len()).fold(0, |b, i| if results[i].0 > results[b].0 { i } else { b });
    let (best_value, _, _, best_c) = &results[best_start];
    let c_star = AncillaCoeffs::normalized(best_c.clone())?;
    let lambda_sq_best = best_value.max(0.0);
    let lambda1 = lambda_sq_best.sqrt();
    let (g_star, stationarity_residual) = if lambda1 > 0.0 {
        let rec = recover_g(&c_star, lambda1, eps_last)?;
        (rec.g, rec.stationarity_residual)
    } else {
        (GBlock::zeros(d_a), 0.0)
    };
    let arbitrated_rate = if cfg.arbitrate {
        assemble_and_arbitrate_with(&c_star, &g_star, cfg.dim_cap, &FdConfig::richardson(1e-5)).ok()
    } else {
        None
    };
    let converged = results.iter().filter(|r| r.1 <= cfg.grad_tol).count();
    Ok(AncillaOptimum {
        d_a,
        d_ancilla: d_anc,
        value: 2.0 * lambda1,
        lambda1,
        g_star: g_star.clone(),
        starts: cfg.starts,
        converged_fraction: converged as f64 / cfg.starts as f64,
        regularization: eps_last,
        diagnostics: SupDiagnostics {
            eps_schedule: cfg.eps_schedule.clone(),
            delta_schedule: cfg.delta_schedule.clone(),
            fd_step: cfg.fd_step,
            best_start,
            start_values: results.iter().map(|r| 2.0 * r.0.max(0.0).sqrt()).collect(),
            iterations: results.iter().map(|r| r.2).collect(),
            gradient_norms: results.iter().map(|r| r.1).collect(),
            g_variance: variance_constraint(&c_star, &g_star)?,
            g_objective: ancilla_objective(&c_star, &g_star)?,
            stationarity_residual,
            arbitrated_rate,
        },
        c_star,
    })
}

/// Global state Σ C_{αβ}|α⟩_{A'}|β⟩_A|β⟩_B|α⟩_{B'} (Alice = A'A, Bob = BB')
/// and H = I_{A'} ⊗ H_AB ⊗ I_{B'} with H_AB = Σ iG_{βδ}|ββ⟩⟨δδ|.
pub fn assemble(coeffs: &AncillaCoeffs, g: &GBlock, cap: usize) -> Result<(PureState, ComplexMatrix)> {
    check_g(coeffs, g)?;
    let (d_anc, d_a) = (coeffs.d_ancilla(), coeffs.d_a());
    let side = d_anc * d_a;
    let dim = side * side;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let mut amplitudes = DVector::zeros(dim);
    for alpha in 0..d_anc {
        for beta in 0..d_a {
            let alice = alpha * d_a + beta;
            let bob = beta * d_anc + alpha;
            amplitudes[alice * side + bob] = Complex64::new(coeffs.c()[(alpha, beta)], 0.0);
        }
    }
    let psi = PureState::new(side, side, amplitudes)?;
    let gm = g.to_matrix();
    let mut h_ab = ComplexMatrix::zeros(d_a * d_a, d_a * d_a);
    for beta in 0..d_a {
        for delta in 0..d_a {
            h_ab[(beta * d_a + beta, delta * d_a + delta)] = Complex64::new(0.0, gm[(beta, delta)]);
        }
    }
    let h = build_structured_hamiltonian(&h_ab, d_anc, d_anc)?;
    Ok((psi, h))
}

/// Finite-difference entanglement rate of the assembled pair, using the
/// default cap and a Richardson step of 1e-5.
pub fn assemble_and_arbitrate(coeffs: &AncillaCoeffs, g: &GBlock) -> Result<f64> {
    assemble_and_arbitrate_with(coeffs, g, DEFAULT_DIM_CAP, &FdConfig::richardson(1e-5))
}

pub fn assemble_and_arbitrate_with(coeffs: &AncillaCoeffs, g: &GBlock, cap: usize, fd: &FdConfig) -> Result<f64> {
    let (psi, h) = assemble(coeffs, g, cap)?;
    fd_rate(&psi, &h, fd)
}
