//! Noise-robust adaptive gradient descent.
//!
//! [`tdist`] holds the Student's-t moment estimator at the heart of the
//! AdaTerm optimizer, [`optim`] the optimizer suite built on it (plus Adam,
//! AdaBelief and t-Adam baselines), and the remaining modules the models,
//! problems and experiment harness used to exercise them.

mod checkpoint;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod optim;
pub mod problems;
pub mod regret;
pub mod surfaces;
pub mod tdist;

pub use error::{Error, Result};
