use entrate::ancilla::{
    ancilla_objective, ancilla_objective_index, lambda_sq, variance_constraint, variance_constraint_index,
    AncillaCoeffs, GBlock,
};
use entrate::optimum::{lagrange_solve, max_rate};
use entrate::qcore::{
    kron, partial_trace_b, random_hermitian, random_state, random_unitary, reduced_density_a, schmidt_decompose,
    von_neumann_entropy,
};
use entrate::rate::{energy_stats, gamma_rate, hamiltonian_from_block, rate, schmidt_block, SchmidtBlock};
use entrate::LogBase;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn dim() -> impl Strategy<Value = usize> {
    2usize..=5
}

fn coeffs(d_anc: usize, d_a: usize) -> impl Strategy<Value = AncillaCoeffs> {
    proptest::collection::vec(0.01f64..1.0, d_anc * d_a)
        .prop_map(move |v| AncillaCoeffs::normalized(DMatrix::from_row_slice(d_anc, d_a, &v)).unwrap())
}

fn g_block(d: usize) -> impl Strategy<Value = GBlock> {
    proptest::collection::vec(-3.0f64..3.0, d * (d - 1) / 2).prop_map(move |v| GBlock::from_upper(d, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_is_linear_in_the_hamiltonian(d_a in dim(), d_b in dim(), seed in any::<u64>(), s in -5.0f64..5.0) {
        let psi = random_state(d_a, d_b, seed).unwrap();
        let h1 = random_hermitian(d_a * d_b, seed ^ 1).unwrap();
        let h2 = random_hermitian(d_a * d_b, seed ^ 2).unwrap();
        let combo = &h1 * Complex64::new(s, 0.0) + &h2;
        let lhs = rate(&psi, &combo).unwrap();
        let rhs = s * rate(&psi, &h1).unwrap() + rate(&psi, &h2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn reversing_the_hamiltonian_reverses_the_rate(d_a in dim(), d_b in dim(), seed in any::<u64>()) {
        let psi = random_state(d_a, d_b, seed).unwrap();
        let h = random_hermitian(d_a * d_b, seed ^ 3).unwrap();
        prop_assert!((rate(&psi, &h).unwrap() + rate(&psi, &(-h)).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn schmidt_block_determines_the_rate(d_a in dim(), d_b in dim(), seed in any::<u64>()) {
        let psi = random_state(d_a, d_b, seed).unwrap();
        let state = schmidt_decompose(&psi).unwrap();
        let h = random_hermitian(d_a * d_b, seed ^ 4).unwrap();
        let block = schmidt_block(&h, &state).unwrap();
        let h_block = hamiltonian_from_block(&block, &state);
        prop_assert!((rate(&psi, &h).unwrap() - rate(&psi, &h_block).unwrap()).abs() < 1e-10);
        let real = SchmidtBlock::new(block.matrix().map(|z| Complex64::new(z.re, 0.0))).unwrap();
        prop_assert!(gamma_rate(&state, &real).abs() < 1e-12);
    }

    #[test]
    fn local_unitaries_leave_rate_and_entropy_fixed(d_a in dim(), d_b in dim(), seed in any::<u64>()) {
        let psi = random_state(d_a, d_b, seed).unwrap();
        let h = random_hermitian(d_a * d_b, seed ^ 5).unwrap();
        let u = kron(&random_unitary(d_a, seed ^ 6).unwrap(), &random_unitary(d_b, seed ^ 7).unwrap());
        let psi_u = psi.apply(&u).unwrap();
        let h_u = &u * &h * u.adjoint();
        prop_assert!((rate(&psi, &h).unwrap() - rate(&psi_u, &h_u).unwrap()).abs() < 1e-9);
        let s = von_neumann_entropy(&reduced_density_a(&psi), LogBase::Nat).unwrap();
        let s_u = von_neumann_entropy(&reduced_density_a(&psi_u), LogBase::Nat).unwrap();
        prop_assert!((s - s_u).abs() < 1e-10);
    }

    #[test]
    fn partial_trace_preserves_trace(d_a in dim(), d_b in dim(), seed in any::<u64>()) {
        let rho = random_state(d_a, d_b, seed).unwrap().density_matrix();
        let reduced = partial_trace_b(&rho, d_a, d_b).unwrap();
        prop_assert!((reduced.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn rate_is_bounded_by_the_surprisal_variance(d_a in dim(), d_b in dim(), seed in any::<u64>()) {
        let psi = random_state(d_a, d_b, seed).unwrap();
        let h = random_hermitian(d_a * d_b, seed ^ 8).unwrap();
        let stats = energy_stats(&psi, &h).unwrap();
        let state = schmidt_decompose(&psi).unwrap();
        let bound = max_rate(&state) * stats.variance.sqrt();
        prop_assert!(rate(&psi, &h).unwrap().abs() <= bound + 1e-9);
    }

    #[test]
    fn lagrange_solution_is_feasible(d in dim(), seed in any::<u64>()) {
        let state = schmidt_decompose(&random_state(d, d, seed).unwrap()).unwrap();
        let sol = lagrange_solve(&state);
        let c = state.coefficients();
        let norm: f64 = sol.k.iter().map(|k| k * k).sum();
        let ortho: f64 = sol.k.iter().zip(c.iter()).map(|(k, c)| k * c).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10 && ortho.abs() < 1e-10);
        prop_assert!(sol.stationarity_residual(&state) < 1e-9);
        prop_assert!((sol.max_rate - max_rate(&state)).abs() < 1e-10);
    }

    #[test]
    fn ancilla_forms_agree(
        (c, g) in (1usize..=3, 2usize..=4).prop_flat_map(|(n, d)| (coeffs(n, d), g_block(d)))
    ) {
        let (m, i) = (ancilla_objective(&c, &g).unwrap(), ancilla_objective_index(&c, &g).unwrap());
        prop_assert!((m - i).abs() < 1e-12 * (1.0 + m.abs()));
        let (m, i) = (variance_constraint(&c, &g).unwrap(), variance_constraint_index(&c, &g).unwrap());
        prop_assert!((m - i).abs() < 1e-12 * (1.0 + m.abs()));
    }

    #[test]
    fn regularization_is_monotone(
        c in (1usize..=3, 2usize..=4).prop_flat_map(|(n, d)| coeffs(n, d)),
        e1 in 1e-10f64..1e-2,
        e2 in 1e-10f64..1e-2,
    ) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(lambda_sq(&c, hi).unwrap() <= lambda_sq(&c, lo).unwrap() * (1.0 + 1e-12) + 1e-15);
    }
}
