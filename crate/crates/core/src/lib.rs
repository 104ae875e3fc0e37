//! Estimation of complete-ranking distributions and possibly non-ignorable
//! missing mechanisms from top-t partially ranked data.
//!
//! The pipeline is:
//!
//! - [`permkit`]: permutations, top-t rankings, Kendall distance, the Cayley
//!   graph of the symmetric group under adjacent transpositions.
//! - [`mallows`]: Mallows and Mallows-mixture models on complete rankings.
//! - [`missing`]: the per-ranking length table `P(t | π)`, simulation
//!   mechanisms and the dataset file format.
//! - [`emcore`]: EM over latent complete rankings with a graph-regularized
//!   M-step for the missing table, plus the unregularized and MAR baselines.
//! - [`admm`]: the ADMM solver used by that M-step.
//! - [`eval`]: total-variation losses, classification error, two-fold
//!   cross-validation and the replicate experiment harness.
//!
//! All enumerations are exact, so the item count is capped (see
//! [`permkit::DEFAULT_MAX_ITEMS`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod emcore;
mod error;
pub mod eval;
pub mod exec;
pub mod mallows;
pub mod missing;
pub mod permkit;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Execution;
