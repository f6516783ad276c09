//! Prior-informed fixed-budget best-arm identification.
//!
//! The library covers exact Gaussian posteriors for independent, linear and
//! hierarchical bandits, prior-dependent error bounds and the allocations that
//! minimize them, the Sequential Halving and Successive Rejects baselines, a
//! Laplace-approximated logistic bandit, and a seeded Monte-Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod baselines;
pub mod bounds;
pub mod config;
pub mod error;
pub mod glm;
pub mod linalg;
pub mod models;
pub mod posterior;
pub mod sim;

pub use error::{Error, Result};

// Book chapters are compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/models.md")]
    pub struct Models;
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub struct Bounds;
    #[doc = include_str!("../../../book/src/allocations.md")]
    pub struct Allocations;
    #[doc = include_str!("../../../book/src/baselines.md")]
    pub struct Baselines;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
    #[doc = include_str!("../../../book/src/configuration.md")]
    pub struct Configuration;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
