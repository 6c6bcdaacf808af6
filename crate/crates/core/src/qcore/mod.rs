//! Dense complex linear algebra for few-qubit states and operators.
//!
//! Routines are written for any square dimension; the rest of the crate
//! only uses dimension 4 (two qubits).

mod eig;
mod matrix;
mod measures;
mod state;

pub use eig::{eigh, hermitian_eig, matrix_exp_hermitian, EigenSystem};
pub use matrix::CMatrix;
pub use measures::{expectation, fidelity, relative_entropy, shannon_entropy, von_neumann_entropy};
pub use state::{DensityMatrix, HermitianOperator, StateVector};
