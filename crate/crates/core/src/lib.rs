//! Stochastic rank-1 bandits.
//!
//! An arm is a (row, column) pair; pulling it returns the product of a random
//! row value and a random column value, so the expected reward matrix is the
//! outer product of the row and column means. This crate provides:
//!
//! - [`model`]: problem instances, gap statistics and the [`Policy`] trait,
//! - [`env`]: reward samplers (Bernoulli, Gaussian, point mass, low rank),
//! - [`rank1elim`]: the staged row/column elimination algorithm,
//! - [`baselines`]: UCB1, LinUCB and GLM-UCB,
//! - [`lowerbound`]: the asymptotic KL lower bound and its allocation,
//! - [`harness`]: seeded replications, sweeps and CSV/JSON/SVG output.
//!
//! Indices are 0-based everywhere, including JSON and CSV files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod lowerbound;
pub mod model;
pub mod rank1elim;
pub mod rng;

pub use error::{Error, Result};
pub use model::{Arm, GapSummary, NoiseModel, Policy, Rank1Instance};
