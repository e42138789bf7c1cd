//! Hierarchical human activity recognition from featurized smartphone and
//! smartwatch sensor data.
//!
//! A binary root network separates stationary from non-stationary activity and
//! one network per parent group picks the final activity (top-down). The crate
//! also provides the flat baselines, the evaluation metrics and the
//! persistence formats used by the `hharnet` command-line tool.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod container;
pub mod error;
pub mod evaluate;
pub mod hierarchy;
pub mod ingest;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
