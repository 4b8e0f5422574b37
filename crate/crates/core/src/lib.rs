//! Boosting with the quadratic loss.
//!
//! The crate provides the QuadBoost family (vanilla and L1, L2, L∞
//! regularized closed-form weight rules) over a finite, negation-closed pool
//! of decision stumps, an AdaBoost baseline, Monte-Carlo Rademacher
//! complexity estimates with the associated ensemble risk bound, and a
//! cross-validation harness that selects hyperparameters the way the
//! benchmark protocol prescribes.

// `!(x >= c)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bounds;
pub mod data;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod model;
pub mod registry;
pub mod stumps;
pub mod verify;

pub use error::{Error, Result};
