//! Instantaneous entanglement generation rates of bipartite Hamiltonian
//! dynamics under an energy-variance budget.
//!
//! The crate is organized bottom-up:
//!
//! - [`qcore`]: dense complex matrices, Schmidt decomposition, partial trace,
//!   von Neumann entropy, Hermitian exponentials and seeded generators.
//! - [`rate`]: the closed-form rate Γ(ψ, H) read off the Schmidt-diagonal
//!   block of H, plus mean energy and the real/imaginary variance split.
//! - [`optimum`]: the variance-constrained maximum over Hamiltonians without
//!   ancillas, its multipliers, the optimal state family and Hamiltonian.
//! - [`ancilla`]: the ancilla-assisted problem written in the coefficient
//!   matrix C, the Schmidt-block imaginary part G and K = C log C.
//! - [`oracle`]: finite-difference rates under exact unitary evolution, used
//!   as ground truth by the tests and the CLI `verify` command.
//!
//! All logarithms are natural unless a [`LogBase`] says otherwise.

#![forbid(unsafe_code)]

pub mod ancilla;
pub mod error;
pub mod optimum;
pub mod oracle;
pub mod qcore;
pub mod rate;

pub use error::{Error, Result};
pub use qcore::{ComplexMatrix, LogBase, PureState, SchmidtState};
