//! Samplers for structured logconcave distributions built on restricted
//! Gaussian oracles (RGOs).
//!
//! The crate provides the alternating-sampling reduction, an exact
//! rejection-based RGO for well-conditioned smooth functions, a composite
//! sampler for `exp(-f - g)` given an RGO for `g`, a subsampled
//! Metropolized random walk for finite sums, and the numerical and
//! statistical tooling used to check them.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod chain;
pub mod composite;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod finitesum;
pub mod gaussian;
pub mod linalg;
pub mod models;
pub mod optimize;
pub mod oracle;
pub mod parallel;
pub mod quadrature;
pub mod reduction;
pub mod rgo;
pub mod run;
pub mod stats;
pub mod validate;
pub mod wellcond;

pub use chain::{ChainDiagnostics, ChainState};
pub use error::{Error, Result};
pub use gaussian::RngStream;
pub use oracle::{FiniteSumOracle, FunctionOracle, ProblemMeta, QueryTally, RgoHandle};
