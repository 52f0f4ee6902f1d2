//! Quantifying basis risk in parametric insurance.
//!
//! A parametric contract pays `Y = φ(θ)` computed from an observable parameter
//! `θ` instead of the actual loss `X`. This crate measures how far the two drift
//! apart when `X` is large:
//!
//! - [`margins`]: Pareto parameters and the log-linear payoff transform.
//! - [`copulas`]: dependence between the parameter and the loss driver.
//! - [`tail_metrics`]: empirical gap measures `E[X−Y | X≥s]`, `E[(X−Y)² | X≥s]`,
//!   trigger probabilities and tail dependence.
//! - [`gaussian_oracle`]: closed forms for bivariate Gaussian losses.
//! - [`evt`]: peaks-over-threshold generalized Pareto fitting.
//! - [`simlab`]: the copula-driven simulation experiments and benchmarks.
//! - [`flood_pipeline`]: deflation, regression tree payoff, cross-validation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copulas;
pub mod error;
pub mod evt;
pub mod flood_pipeline;
pub mod gaussian_oracle;
pub mod margins;
pub mod rng;
pub mod simlab;
pub mod special;
pub mod stats;
pub mod tail_metrics;

pub use error::{Error, Result};
