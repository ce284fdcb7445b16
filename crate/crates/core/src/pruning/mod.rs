//! Sample scoring and per-epoch pruning plans.
//!
//! The scored policy partitions samples around the mean complexity score,
//! keeps the informative set, keeps each redundant sample with probability
//! `1 - r`, and up-weights the survivors by `1/(1-r)` times a stationarity
//! correction. Epoch 1 and the epochs after the anneal cutoff use all data.

mod config;
mod plan;
mod score;

pub use config::{Ablations, Policy, PruneConfig};
pub use plan::{
    baseline_plan, epoch_plan, is_full_epoch, partition, plan_for_epoch, rescale_weights,
    soft_prune, EpochPlan, Membership, PlanContext,
};
pub use score::{score_sample, SampleScore};
