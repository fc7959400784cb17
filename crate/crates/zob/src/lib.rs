//! Zeroth-order block primal-dual optimization toolkit.
//!
//! Solves constrained black-box problems `min h(x) s.t. c(x) <= 0` through
//! the Lagrangian min-max reformulation, using only simultaneous function
//! evaluations of `(h, c)`. The solvers estimate partial gradients over
//! random coordinate blocks, so the per-step query cost is an adjustable
//! `b + 1` instead of the full `d + 1`:
//!
//! - [`algorithms::Algorithm::ZobGda`]: block gradient descent ascent;
//! - [`algorithms::Algorithm::ZobSgda`]: the proximally smoothed variant with
//!   an exponentially averaged anchor, which attains the better overall
//!   query-complexity regime;
//! - [`algorithms::Algorithm::RgeGda`]: a two-point random-direction baseline.
//!
//! The crate also ships the oracle layer with exact query accounting
//! ([`problems`]), the estimator family ([`estimators`]), a stationarity /
//! KKT metrics suite ([`metrics`]), and a reproducible benchmark harness
//! with CSV output ([`bench`]).
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, and the `zob` binary for the batch harness.

pub mod algorithms;
pub mod bench;
pub mod error;
pub mod estimators;
mod la;
pub mod metrics;
pub mod problems;

pub use error::{Error, Result};
