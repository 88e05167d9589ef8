//! Adaptive measurement scheduling for Ramsey magnetometry.
//!
//! A static field `B` is estimated from binary Ramsey outcomes with
//! `Pr(X = 0 | B) = 1/2 + e^{-tau/T} cos(2 mu B tau + theta) / 2`.
//! The crate provides grid-based Bayesian inference, a Fourier-domain
//! analysis of periodic posteriors, four scheduling policies and a seeded
//! simulation harness with CSV reporting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod error;
pub mod fourier;
pub mod policy;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
