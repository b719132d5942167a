//! Shuffled linear regression.
//!
//! Given features `X` and label rows `Y` whose pairing with `X` was lost to an
//! unknown permutation (optionally with a few known seed pairs), estimate the
//! permutation, the regression coefficients and the de-shuffled labels.
//!
//! The main solver is [`gncr::gncr_solve`], a graduated non-convexity
//! Frank-Wolfe method on the Birkhoff polytope. [`baselines`] provides ordinary
//! least squares and naive alternating minimization, [`metrics`] the evaluation
//! measures, [`synth`] the generative model, and [`harness`] data loading,
//! preprocessing and experiment protocols.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod baselines;
pub mod error;
pub mod gncr;
pub mod harness;
pub mod metrics;
pub mod objective;
pub mod synth;
pub mod types;

pub use nalgebra;

pub use assignment::{hungarian, sort_assignment, AssignmentResult};
pub use error::{Error, Result};
pub use gncr::{gncr_solve, GncrConfig, SolveResult, StageTrace};
pub use objective::{objective_matrix, objective_value, ridge_gram, ridge_solve, ObjectiveMatrices};
pub use types::{Coefficients, Dataset, Permutation, SeedSet};
