//! Forecasting the arrival of fault-tolerant quantum computing from the
//! historical record of published devices.
//!
//! The pipeline runs from a curated CSV of systems ([`dataset`]) through a
//! combined quality index ([`glq`]), a bivariate frontier model
//! ([`frontier`]), record-based extrapolation ([`trend`]) and rolling
//! backtests ([`backtest`]), ending in JSON and SVG artifacts ([`report`],
//! [`svg`]) driven from the command line ([`cli`]).

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod bootstrap;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod frontier;
pub mod glq;
pub mod regression;
pub mod report;
pub mod svg;
pub mod trend;

pub use error::{Error, Result};

/// The curated systems table shipped with the crate.
pub const BUNDLED_CSV: &str = include_str!("../data/quantum_systems.csv");
