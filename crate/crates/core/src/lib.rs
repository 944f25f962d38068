//! Finite-shot stochastic gradient descent for parameterized quantum circuits.
//!
//! The crate bundles a dense statevector simulator with the estimator and
//! optimizer machinery needed to train variational circuits from finite
//! measurement budgets: parameter-shift rules (including shared-parameter
//! circuits), singly and doubly stochastic gradient estimators with exact
//! measurement-cost accounting, plateau-decay and Adam learning-rate
//! strategies, and ready-made benchmark tasks (transverse-field Ising VQE,
//! MaxCut QAOA, MSE binary classification).
//!
//! The `harness` module and the `shotgrad` binary drive seeded ensembles of
//! optimization runs and emit CSV traces keyed by cumulative measurement
//! cost.

pub mod circuits;
pub mod error;
pub mod estimators;
pub mod gradients;
pub mod harness;
pub mod optimizers;
pub mod rng;
pub mod sim;
pub mod tasks;

pub use error::{Error, Result};
