//! Cubic-regularized Newton methods for finite-sum non-convex problems.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense vectors, symmetric matrices, eigensolver, shifted solves and Lanczos.
//! - [`objectives`]: the finite-sum objective contract and the ERM / synthetic problems.
//! - [`dataio`]: LIBSVM ingestion, normalization, subsampling and synthetic data.
//! - [`cubic`]: the cubic subproblem oracle (exact and Lanczos) and inexactness checks.
//! - [`optimizers`]: SVRC, full cubic regularization, subsampled cubic regularization,
//!   penalty schedules, oracle accounting and the parameter recursion.
//! - [`metrics`]: stationarity measures recorded along a run.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubic;
pub mod dataio;
pub mod linalg;
pub mod metrics;
pub mod objectives;
pub mod optimizers;

mod error;

pub use error::{Error, Result};
pub use linalg::{SymMatrix, Vector};
pub use objectives::FiniteSumObjective;
