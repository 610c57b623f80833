//! `entrate`: entanglement generation rates from the command line.
//!
//! Exit codes: 0 on success, 1 when a numeric check fails or a solver does not
//! converge, 2 for bad input.

mod commands;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entrate::LogBase;

pub const DIM_CAP_VAR: &str = "ENTRATE_DIM_CAP";

#[derive(Parser, Debug)]
#[command(name = "entrate", version, about = "Entanglement generation rates under an energy-variance budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Unit of the headline rate; both units are always reported.
    #[arg(long, global = true, value_enum, default_value_t = BaseArg::Nat)]
    pub log_base: BaseArg,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form rate of a state/Hamiltonian pair, checked against finite differences.
    Rate(RateArgs),
    /// Optimal rate for d×d systems, optionally with d_A'-dimensional ancillas.
    Optimize(OptimizeArgs),
    /// Rate along the optimal family, or optimal rates over a range of dimensions.
    Sweep(SweepArgs),
    /// Run the cross-module invariants on random instances.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct RateArgs {
    /// d_A × d_B amplitude matrix in matrix JSON.
    #[arg(long)]
    pub state: PathBuf,
    /// Hamiltonian on C^{d_A} ⊗ C^{d_B} in matrix JSON.
    #[arg(long)]
    pub hamiltonian: PathBuf,
    /// Largest accepted |closed form − finite difference|, in nats.
    #[arg(long, default_value_t = 2e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub fd_step: f64,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub dim: usize,
    /// Must equal --dim.
    #[arg(long)]
    pub dim_b: Option<usize>,
    /// Ancilla dimension d_A' (and d_B' = d_A').
    #[arg(long)]
    pub ancilla: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Iteration cap per refinement round and start.
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Gradient norm counted as converged in the ancilla search.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Finite-difference step for the ancilla search gradient.
    #[arg(long, default_value_t = 1e-6)]
    pub fd_step: f64,
    /// Directory for optimal_state.json and optimal_hamiltonian.json.
    #[arg(long)]
    pub design_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Inclusive dimension range a..b.
    #[arg(long, conflicts_with = "gamma_grid")]
    pub dim_range: Option<String>,
    /// Number of interior γ points k/(n+1).
    #[arg(long, required_unless_present = "dim_range")]
    pub gamma_grid: Option<usize>,
    /// Dimension for --gamma-grid.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// With --dim-range, also sweep d_A' = 1..=n through the ancilla search.
    #[arg(long, requires = "dim_range")]
    pub ancilla: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Tolerance for closed form vs finite difference.
    #[arg(long, default_value_t = 2e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub fd_step: f64,
    #[arg(long, hide = true)]
    pub inject_sign_flip: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    Nat,
    #[value(name = "2")]
    Two,
}

impl From<BaseArg> for LogBase {
    fn from(b: BaseArg) -> Self {
        match b {
            BaseArg::Nat => LogBase::Nat,
            BaseArg::Two => LogBase::Two,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numeric(String),
}

impl From<entrate::Error> for Failure {
    fn from(e: entrate::Error) -> Self {
        use entrate::Error::*;
        match e {
            NoConvergence { .. } | Singular { .. } | NegativeEigenvalue { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

pub type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Rate(args) => commands::rate(&cli.common, args),
        Command::Optimize(args) => commands::optimize(&cli.common, args),
        Command::Sweep(args) => commands::sweep(&cli.common, args),
        Command::Verify(args) => verify::run(&cli.common, args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
