//! Dynamic sample pruning for spatio-temporal forecasting.
//!
//! Training samples are scored each epoch by a complexity-informed error
//! statistic, low-scoring samples are soft-pruned at random, survivors are
//! re-weighted by their dynamic intensity, and the final epochs anneal back
//! to full-data training. Baseline pruning policies, a small forecaster with
//! manual gradients, redundancy analytics and an experiment harness surround
//! the policy.

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod pruning;

pub use error::{Error, Result};
