//! Cross-module invariants on seeded random instances. The report contains no
//! timings, so equal seeds give byte-identical output.

use entrate::ancilla::{
    ancilla_objective, ancilla_objective_index, assemble_and_arbitrate_with, variance_constraint,
    variance_constraint_index, AncillaCoeffs, GBlock,
};
use entrate::optimum::{achieving_hamiltonian, brute_force_max_k, lagrange_solve, max_rate};
use entrate::oracle::{direct_stats, fd_rate, FdConfig};
use entrate::qcore::{kron, random_hermitian, random_state, random_unitary, schmidt_decompose, seeded_rng};
use entrate::rate::{energy_stats, energy_stats_in, gamma_rate, mean_energy, schmidt_block};
use entrate::{ComplexMatrix, PureState};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::commands::{dim_cap, emit, positive};
use crate::{CmdResult, Common, Failure, Format, VerifyArgs};

#[derive(Serialize)]
struct CheckReport {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    failed: usize,
    worst: f64,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    trials: usize,
    pass: bool,
    checks: Vec<CheckReport>,
}

struct Check {
    report: CheckReport,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check {
            report: CheckReport {
                name,
                tolerance,
                cases: 0,
                failed: 0,
                worst: 0.0,
                failures: Vec::new(),
            },
        }
    }

    /// Records one case whose error must stay below `tol`.
    fn case(&mut self, trial: usize, error: f64, tol: f64, context: impl FnOnce() -> String) {
        let r = &mut self.report;
        r.cases += 1;
        r.worst = r.worst.max(error);
        if error.is_nan() || error >= tol {
            r.failed += 1;
            r.failures.push(format!("trial {trial}: error {error:.3e} >= {tol:.1e} ({})", context()));
        }
    }

    fn error(&mut self, trial: usize, e: entrate::Error) {
        let r = &mut self.report;
        r.cases += 1;
        r.failed += 1;
        r.failures.push(format!("trial {trial}: {e}"));
    }
}

struct Instance {
    psi: PureState,
    h: ComplexMatrix,
    d_a: usize,
    d_b: usize,
}

fn trial_seed(seed: u64, trial: usize, slot: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add((trial as u64) << 8 | slot)
}

fn instance(seed: u64, trial: usize) -> entrate::Result<Instance> {
    let mut rng = seeded_rng(trial_seed(seed, trial, 0));
    let (d_a, d_b) = (rng.random_range(2..=4), rng.random_range(2..=4));
    Ok(Instance {
        psi: random_state(d_a, d_b, trial_seed(seed, trial, 1))?,
        h: random_hermitian(d_a * d_b, trial_seed(seed, trial, 2))?,
        d_a,
        d_b,
    })
}

fn min_gap(c: &[f64]) -> f64 {
    c.windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min)
}

pub fn run(common: &Common, args: &VerifyArgs) -> CmdResult {
    if args.trials == 0 {
        return Err(Failure::Input("--trials must be at least 1".into()));
    }
    if !positive(args.tol) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", args.tol)));
    }
    let fd = FdConfig::richardson(args.fd_step);
    fd.validate()?;
    let cap = dim_cap()?;
    let sign = if args.inject_sign_flip { -1.0 } else { 1.0 };
    let seed = common.seed;

    let mut oracle = Check::new("closed form vs finite difference", args.tol);
    let mut decomposition = Check::new("variance decomposition", 1e-9);
    let mut mean = Check::new("mean energy vs direct", 1e-10);
    let mut invariance = Check::new("local-unitary invariance", 1e-9);
    let mut bound = Check::new("variance bound |rate| <= 2 sqrt(f) dE", 1e-9);
    let mut lagrange = Check::new("Lagrange optimum vs brute force", 1e-6);
    let mut identities = Check::new("ancilla index vs trace forms", 1e-12);
    let mut arbitration = Check::new("ancilla construction vs finite difference", 2e-6);

    for t in 0..args.trials {
        let inst = match instance(seed, t) {
            Ok(i) => i,
            Err(e) => {
                oracle.error(t, e);
                continue;
            }
        };
        let dims = || format!("{}x{}", inst.d_a, inst.d_b);
        let res: entrate::Result<()> = (|| {
            let state = schmidt_decompose(&inst.psi)?;
            let block = schmidt_block(&inst.h, &state)?;
            let gamma = sign * gamma_rate(&state, &block);

            let numeric = fd_rate(&inst.psi, &inst.h, &fd)?;
            let tol = if min_gap(state.coefficients().as_slice()) < 1e-7 { args.tol.max(1e-5) } else { args.tol };
            oracle.case(t, (gamma - numeric).abs(), tol, dims);

            let stats = energy_stats(&inst.psi, &inst.h)?;
            let (direct_mean, direct_var) = direct_stats(&inst.psi, &inst.h)?;
            let split = (stats.variance - stats.variance_real_part - stats.variance_imag_part).abs();
            decomposition.case(t, split.max((stats.variance - direct_var).abs()), 1e-9, dims);
            mean.case(t, (mean_energy(&state, &block) - direct_mean).abs(), 1e-10, dims);

            let u = kron(
                &random_unitary(inst.d_a, trial_seed(seed, t, 3))?,
                &random_unitary(inst.d_b, trial_seed(seed, t, 4))?,
            );
            let psi_u = inst.psi.apply(&u)?;
            let state_u = schmidt_decompose(&psi_u)?;
            let h_u = &u * &inst.h * u.adjoint();
            let gamma_u = sign * gamma_rate(&state_u, &schmidt_block(&h_u, &state_u)?);
            invariance.case(t, (gamma - gamma_u).abs(), 1e-9, dims);

            let limit = max_rate(&state) * stats.variance.sqrt();
            bound.case(t, (gamma.abs() - limit).max(0.0), 1e-9, dims);

            let d = inst.d_a;
            let square = schmidt_decompose(&random_state(d, d, trial_seed(seed, t, 5))?)?;
            let sol = lagrange_solve(&square);
            let brute = brute_force_max_k(&square, 8, trial_seed(seed, t, 6));
            let h_opt = achieving_hamiltonian(&square, &sol.k)?;
            let achieved = sign * gamma_rate(&square, &schmidt_block(&h_opt, &square)?);
            let var = energy_stats_in(&square, &h_opt)?.variance_imag_part;
            let err = (sol.max_rate - brute).abs().max((achieved - sol.max_rate).abs()).max((var - 1.0).abs());
            lagrange.case(t, err, 1e-6, || format!("d = {d}"));

            let mut rng = seeded_rng(trial_seed(seed, t, 7));
            let (d_anc, d_a) = (rng.random_range(1..=2), rng.random_range(2..=3));
            let c = AncillaCoeffs::normalized(DMatrix::from_fn(d_anc, d_a, |_, _| rng.random_range(0.05..1.0)))?;
            let g = GBlock::from_upper(d_a, (0..d_a * (d_a - 1) / 2).map(|_| rng.sample(StandardNormal)).collect())?;
            let g = g.scaled(1.0 / variance_constraint(&c, &g)?.sqrt());
            let objective = sign * ancilla_objective(&c, &g)?;
            let forms = (objective - sign * ancilla_objective_index(&c, &g)?)
                .abs()
                .max((variance_constraint(&c, &g)? - variance_constraint_index(&c, &g)?).abs());
            let shape = || format!("{d_anc}x{d_a}");
            identities.case(t, forms, 1e-12, shape);
            let numeric = assemble_and_arbitrate_with(&c, &g, cap, &fd)?;
            arbitration.case(t, (objective - numeric).abs(), 2e-6, shape);
            Ok(())
        })();
        if let Err(e) = res {
            oracle.error(t, e);
        }
    }

    let checks: Vec<CheckReport> = [oracle, decomposition, mean, invariance, bound, lagrange, identities, arbitration]
        .into_iter()
        .map(|c| c.report)
        .collect();
    let pass = checks.iter().all(|c| c.failed == 0);
    let report = VerifyReport {
        seed,
        trials: args.trials,
        pass,
        checks,
    };
    let text = match common.format.unwrap_or(Format::Text) {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Csv => {
            let mut out = String::from("check,tolerance,cases,failed,worst\n");
            for c in &report.checks {
                out.push_str(&format!("{},{:e},{},{},{:e}\n", c.name, c.tolerance, c.cases, c.failed, c.worst));
            }
            out
        }
        Format::Text => table(&report),
    };
    emit(common, &text)?;
    Ok(pass)
}

fn table(report: &VerifyReport) -> String {
    let mut out = format!("verify: seed {}, {} trials\n\n", report.seed, report.trials);
    out.push_str(&format!("{:<44} {:>9} {:>6} {:>7} {:>10}  status\n", "check", "tolerance", "cases", "failed", "worst"));
    for c in &report.checks {
        out.push_str(&format!(
            "{:<44} {:>9.1e} {:>6} {:>7} {:>10.2e}  {}\n",
            c.name,
            c.tolerance,
            c.cases,
            c.failed,
            c.worst,
            if c.failed == 0 { "PASS" } else { "FAIL" }
        ));
    }
    for c in report.checks.iter().filter(|c| c.failed > 0) {
        out.push_str(&format!("\n{}:\n", c.name));
        for f in &c.failures {
            out.push_str(&format!("  {f}\n"));
        }
    }
    out.push_str(&format!("\nresult: {}\n", if report.pass { "PASS" } else { "FAIL" }));
    out
}
