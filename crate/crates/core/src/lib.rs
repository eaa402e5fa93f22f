//! Time-lagged causal discovery for multivariate time series.
//!
//! The crate provides the PCMCI pipeline ([`pcmci`]), its conditional
//! independence tests ([`indep_tests`]), comparison methods ([`baselines`]),
//! a synthetic benchmark generator ([`synthgen`]) and an evaluation harness
//! ([`bench`]).

// `!(x > t)` guards deliberately reject NaN along with small values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod indep_tests;
pub mod linalg;
pub mod pcmci;
pub mod seed;
pub mod stats;
pub mod synthgen;

pub use dataset::{build_lagged_arrays, LaggedSampleArrays, LaggedVariable, TimeSeriesDataset};
pub use error::{Error, Result};
pub use graph::{LaggedLink, LinkResult, TimeSeriesGraph};
