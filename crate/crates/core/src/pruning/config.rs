use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    StPrune,
    HardRandom,
    SoftRandom,
    LossMeanUniform,
    None,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::None,
        Policy::HardRandom,
        Policy::SoftRandom,
        Policy::LossMeanUniform,
        Policy::StPrune,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::StPrune => "st_prune",
            Policy::HardRandom => "hard_random",
            Policy::SoftRandom => "soft_random",
            Policy::LossMeanUniform => "loss_mean_uniform",
            Policy::None => "none",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy {s:?}")))
    }
}

/// Component switches for ablation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ablations {
    /// Score by mean error only (lambda forced to 0).
    pub disable_complexity: bool,
    /// All retained samples get weight 1.
    pub disable_rescale: bool,
    /// Never revert to full-data epochs.
    pub disable_anneal: bool,
}

impl Ablations {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.disable_complexity {
            parts.push("wo_stc");
        }
        if self.disable_rescale {
            parts.push("wo_res");
        }
        if self.disable_anneal {
            parts.push("wo_anne");
        }
        if parts.is_empty() {
            "full".into()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PruneConfig {
    pub policy: Policy,
    /// Weight of the spatio-temporal complexity terms in the score.
    pub lambda: f64,
    /// Pruning ratio r; redundant samples survive with probability 1 - r.
    pub prune_ratio: f64,
    /// Strength of the stationarity correction.
    pub alpha: f64,
    pub epsilon: f64,
    /// Fraction of epochs that may be pruned before reverting to full data.
    pub anneal_cutoff: f64,
    /// Apply the rescaling weights to the informative set instead of the
    /// retained redundant samples.
    pub weights_on_informative: bool,
    pub ablations: Ablations,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            policy: Policy::StPrune,
            lambda: 0.5,
            prune_ratio: 0.5,
            alpha: 0.5,
            epsilon: 1e-6,
            anneal_cutoff: 0.9,
            weights_on_informative: false,
            ablations: Ablations::default(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda {} must be >= 0", self.lambda));
        }
        if !(0.0..1.0).contains(&self.prune_ratio) {
            return fail(format!(
                "prune_ratio {} must be in [0, 1)",
                self.prune_ratio
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha {} must be >= 0", self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon {} must be > 0", self.epsilon));
        }
        if !(self.anneal_cutoff > 0.0 && self.anneal_cutoff <= 1.0) {
            return fail(format!(
                "anneal_cutoff {} must be in (0, 1]",
                self.anneal_cutoff
            ));
        }
        Ok(())
    }

    /// Lambda actually used for scoring.
    pub fn scoring_lambda(&self) -> f64 {
        if self.ablations.disable_complexity {
            0.0
        } else {
            self.lambda
        }
    }

    pub fn effective_cutoff(&self) -> f64 {
        if self.ablations.disable_anneal {
            1.0
        } else {
            self.anneal_cutoff
        }
    }

    /// Last epoch (1-based) that may be pruned.
    pub fn last_pruned_epoch(&self, total_epochs: usize) -> usize {
        (self.effective_cutoff() * total_epochs as f64 + 1e-9).floor() as usize
    }

    pub fn retention(&self) -> f64 {
        1.0 - self.prune_ratio
    }
}
