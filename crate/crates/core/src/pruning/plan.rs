use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Policy, PruneConfig, SampleScore};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// How one training sample was treated in an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// Full-data epoch.
    Full,
    Informative,
    RedundantKept,
    RedundantPruned,
    /// Picked by a random baseline.
    Selected,
    Unselected,
}

impl Membership {
    pub fn name(self) -> &'static str {
        match self {
            Membership::Full => "full",
            Membership::Informative => "informative",
            Membership::RedundantKept => "redundant_kept",
            Membership::RedundantPruned => "redundant_pruned",
            Membership::Selected => "selected",
            Membership::Unselected => "unselected",
        }
    }
}

/// Samples to train on in one epoch and their loss weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub epoch: usize,
    /// `(train index, weight)`, sorted by index.
    pub retained: Vec<(usize, f64)>,
    pub pruned_count: usize,
    /// Partition threshold; `None` when no partition was made.
    pub mean_score: Option<f64>,
    pub is_full_epoch: bool,
    pub membership: Vec<Membership>,
}

impl EpochPlan {
    pub fn full(epoch: usize, train_size: usize) -> Self {
        Self {
            epoch,
            retained: (0..train_size).map(|i| (i, 1.0)).collect(),
            pruned_count: 0,
            mean_score: None,
            is_full_epoch: true,
            membership: vec![Membership::Full; train_size],
        }
    }

    pub fn weight_sum(&self) -> f64 {
        self.retained.iter().map(|&(_, w)| w).sum()
    }

    pub fn mean_weight(&self) -> f64 {
        if self.retained.is_empty() {
            0.0
        } else {
            self.weight_sum() / self.retained.len() as f64
        }
    }

    pub fn count(&self, m: Membership) -> usize {
        self.membership.iter().filter(|&&x| x == m).count()
    }

    pub fn informative_count(&self) -> usize {
        self.count(Membership::Informative)
    }

    pub fn retained_redundant_count(&self) -> usize {
        self.count(Membership::RedundantKept)
    }

    /// Writes `index,membership,weight` rows; pruned samples get weight 0.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut weights = vec![0.0; self.membership.len()];
        for &(i, w) in &self.retained {
            weights[i] = w;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "index,membership,weight")?;
        for (i, m) in self.membership.iter().enumerate() {
            writeln!(out, "{i},{},{}", m.name(), weights[i])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Splits indices into the informative set (`h >= mean h`) and the
/// redundant set. Returns `(informative, redundant, mean h)`.
pub fn partition(scores: &[SampleScore]) -> (Vec<usize>, Vec<usize>, f64) {
    if scores.is_empty() {
        return (Vec::new(), Vec::new(), 0.0);
    }
    let mean =
        crate::numerics::mean(&scores.iter().map(|s| s.h).collect::<Vec<_>>()).unwrap_or(0.0);
    let (inf, red): (Vec<&SampleScore>, Vec<&SampleScore>) =
        scores.iter().partition(|s| s.h >= mean);
    (
        inf.into_iter().map(|s| s.index).collect(),
        red.into_iter().map(|s| s.index).collect(),
        mean,
    )
}

/// Keeps each redundant index independently with probability `1 - r`.
pub fn soft_prune(redundant: &[usize], prune_ratio: f64, rng: &mut SeededRng) -> Vec<usize> {
    let keep = 1.0 - prune_ratio;
    redundant
        .iter()
        .copied()
        .filter(|_| rng.bernoulli(keep))
        .collect()
}

/// `w_i = 1/(1-r) * (mean_intensity / (intensity_i + eps))^alpha` for each index.
pub fn rescale_weights(
    indices: &[usize],
    intensities: &[f64],
    mean_intensity: f64,
    prune_ratio: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&prune_ratio) {
        return Err(Error::InvalidArgument(format!(
            "prune ratio {prune_ratio} must be in [0, 1)"
        )));
    }
    let survival = 1.0 / (1.0 - prune_ratio);
    indices
        .iter()
        .map(|&i| {
            let d = *intensities
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("no intensity for sample {i}")))?;
            Ok(if alpha == 0.0 {
                survival
            } else {
                survival * (mean_intensity / (d + epsilon)).powf(alpha)
            })
        })
        .collect()
}

/// Inputs shared by every epoch of one training run.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub total_epochs: usize,
    pub train_size: usize,
    pub intensities: &'a [f64],
    /// Mean dynamic intensity over the full training set.
    pub mean_intensity: f64,
    /// Root of the prune stream; each epoch forks its own generator.
    pub rng: &'a SeededRng,
}

/// True when `epoch` (1-based) trains on the full set under `config`.
pub fn is_full_epoch(epoch: usize, total_epochs: usize, config: &PruneConfig) -> bool {
    match config.policy {
        Policy::None => true,
        Policy::HardRandom | Policy::SoftRandom => false,
        Policy::StPrune | Policy::LossMeanUniform => {
            epoch <= 1 || epoch > config.last_pruned_epoch(total_epochs)
        }
    }
}

/// Plan for the complexity-scored policy. `scores[i]` is the last known
/// score of training sample `i`.
pub fn epoch_plan(
    epoch: usize,
    ctx: &PlanContext<'_>,
    scores: &[Option<SampleScore>],
    config: &PruneConfig,
) -> Result<EpochPlan> {
    if config.policy != Policy::StPrune {
        return match config.policy {
            Policy::None => Ok(EpochPlan::full(epoch, ctx.train_size)),
            other => Err(Error::InvalidArgument(format!(
                "epoch_plan handles st_prune, got {other}"
            ))),
        };
    }
    if is_full_epoch(epoch, ctx.total_epochs, config) {
        return Ok(EpochPlan::full(epoch, ctx.train_size));
    }
    let known = known_scores(scores, ctx.train_size)?;
    let (informative, redundant, mean) = partition(&known);
    let mut rng = ctx.rng.fork(epoch as u64);
    let kept = soft_prune(&redundant, config.prune_ratio, &mut rng);

    let mut weights = vec![0.0; ctx.train_size];
    let mut membership = vec![Membership::RedundantPruned; ctx.train_size];
    for &i in &informative {
        membership[i] = Membership::Informative;
        weights[i] = 1.0;
    }
    for &i in &kept {
        membership[i] = Membership::RedundantKept;
        weights[i] = 1.0;
    }
    if !config.ablations.disable_rescale {
        let targets = if config.weights_on_informative {
            &informative
        } else {
            &kept
        };
        let w = rescale_weights(
            targets,
            ctx.intensities,
            ctx.mean_intensity,
            config.prune_ratio,
            config.alpha,
            config.epsilon,
        )?;
        for (&i, w) in targets.iter().zip(w) {
            weights[i] = w;
        }
    }
    Ok(assemble(epoch, membership, &weights, Some(mean)))
}

/// Plans for the comparison policies. `last_losses[i]` is the most recent
/// training loss of sample `i` (used by `loss_mean_uniform`).
pub fn baseline_plan(
    policy: Policy,
    epoch: usize,
    ctx: &PlanContext<'_>,
    config: &PruneConfig,
    last_losses: &[Option<f64>],
) -> Result<EpochPlan> {
    let n = ctx.train_size;
    let keep_count = ((1.0 - config.prune_ratio) * n as f64).round().max(1.0) as usize;
    match policy {
        Policy::None => Ok(EpochPlan::full(epoch, n)),
        Policy::HardRandom => Ok(random_subset(epoch, n, keep_count, &mut ctx.rng.fork(0))),
        Policy::SoftRandom => Ok(random_subset(
            epoch,
            n,
            keep_count,
            &mut ctx.rng.fork(epoch as u64),
        )),
        Policy::LossMeanUniform => {
            let cfg = PruneConfig {
                policy,
                ..config.clone()
            };
            if is_full_epoch(epoch, ctx.total_epochs, &cfg) {
                return Ok(EpochPlan::full(epoch, n));
            }
            if last_losses.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{} losses for {n} samples",
                    last_losses.len()
                )));
            }
            let missing = last_losses.iter().filter(|l| l.is_none()).count();
            if missing > 0 {
                return Err(Error::MissingScores(missing));
            }
            let losses: Vec<f64> = last_losses.iter().map(|l| l.unwrap()).collect();
            let mean = crate::numerics::mean(&losses)?;
            let below: Vec<usize> = (0..n).filter(|&i| losses[i] < mean).collect();
            let mut rng = ctx.rng.fork(epoch as u64);
            let kept = soft_prune(&below, config.prune_ratio, &mut rng);
            let mut membership = vec![Membership::Informative; n];
            let mut weights = vec![1.0; n];
            for &i in &below {
                membership[i] = Membership::RedundantPruned;
                weights[i] = 0.0;
            }
            let w = 1.0 / (1.0 - config.prune_ratio);
            for &i in &kept {
                membership[i] = Membership::RedundantKept;
                weights[i] = w;
            }
            Ok(assemble(epoch, membership, &weights, Some(mean)))
        }
        Policy::StPrune => Err(Error::InvalidArgument(
            "st_prune is planned by epoch_plan".into(),
        )),
    }
}

/// Dispatches to [`epoch_plan`] or [`baseline_plan`].
pub fn plan_for_epoch(
    epoch: usize,
    ctx: &PlanContext<'_>,
    scores: &[Option<SampleScore>],
    config: &PruneConfig,
) -> Result<EpochPlan> {
    match config.policy {
        Policy::StPrune => epoch_plan(epoch, ctx, scores, config),
        policy => {
            let losses: Vec<Option<f64>> = scores.iter().map(|s| s.map(|s| s.mu)).collect();
            baseline_plan(policy, epoch, ctx, config, &losses)
        }
    }
}

fn known_scores(scores: &[Option<SampleScore>], train_size: usize) -> Result<Vec<SampleScore>> {
    if scores.len() != train_size {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {train_size} samples",
            scores.len()
        )));
    }
    let missing = scores.iter().filter(|s| s.is_none()).count();
    if missing > 0 {
        return Err(Error::MissingScores(missing));
    }
    Ok(scores.iter().flatten().copied().collect())
}

fn random_subset(epoch: usize, n: usize, keep: usize, rng: &mut SeededRng) -> EpochPlan {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut membership = vec![Membership::Unselected; n];
    for &i in &order[..keep.min(n)] {
        membership[i] = Membership::Selected;
    }
    let weights: Vec<f64> = membership
        .iter()
        .map(|m| if *m == Membership::Selected { 1.0 } else { 0.0 })
        .collect();
    assemble(epoch, membership, &weights, None)
}

fn assemble(
    epoch: usize,
    membership: Vec<Membership>,
    weights: &[f64],
    mean_score: Option<f64>,
) -> EpochPlan {
    let retained: Vec<(usize, f64)> = membership
        .iter()
        .enumerate()
        .filter(|(_, m)| !matches!(m, Membership::RedundantPruned | Membership::Unselected))
        .map(|(i, _)| (i, weights[i]))
        .collect();
    EpochPlan {
        epoch,
        pruned_count: membership.len() - retained.len(),
        retained,
        mean_score,
        is_full_epoch: false,
        membership,
    }
}
