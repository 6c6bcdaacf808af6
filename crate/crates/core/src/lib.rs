//! Variational quantum thermalizer for the Heisenberg spin-½ dimer.
//!
//! The numeric core (`qcore`, `model`, `ansatz`, `estimator`, `optimizer`,
//! `vqt`) is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which is what the data-handling layers (`thermo`, `cli`) use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod model;
pub mod optimizer;
pub mod plot;
#[cfg(test)]
mod proptests;
pub mod qcore;
pub mod rng;
pub mod scalar;
pub mod thermo;
pub mod vqt;

pub use error::{Error, Result};
pub use scalar::{NumericPolicy, Scalar};

pub type CMatrix = qcore::CMatrix<f64>;
pub type StateVector = qcore::StateVector<f64>;
pub type DensityMatrix = qcore::DensityMatrix<f64>;
pub type HermitianOperator = qcore::HermitianOperator<f64>;
pub type EigenSystem = qcore::EigenSystem<f64>;
pub type DimerModel = model::DimerModel<f64>;
pub type PauliTerm = model::PauliTerm<f64>;
pub type LatentParams = ansatz::LatentParams<f64>;
pub type CircuitParams = ansatz::CircuitParams<f64>;
pub type ExpectationEstimate = estimator::ExpectationEstimate<f64>;
pub type OptimizationTrace = optimizer::OptimizationTrace<f64>;
pub type VqtParams = vqt::VqtParams<f64>;
pub type VqtProblem = vqt::VqtProblem<f64>;
pub type VqtResult = vqt::VqtResult<f64>;
