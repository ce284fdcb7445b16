use std::path::PathBuf;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use super::{sgd_step, Architecture, ForecasterParams, ModelDims, OptimizerState};
use crate::dataset::{DatasetSplit, WindowedSample};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalResult};
use crate::numerics::{RngState, SeededRng, Stream};
use crate::pruning::{plan_for_epoch, score_sample, PlanContext, PruneConfig, SampleScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub hidden: usize,
    pub embed: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: Architecture::MlpId,
            hidden: 32,
            embed: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub min_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub model: ModelConfig,
    /// Frames per day, for the time-of-day embedding.
    pub period: usize,
    pub prune: PruneConfig,
    /// When set, each epoch's plan is written to `<dir>/epoch_<e>.csv`.
    pub plan_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            base_lr: 1e-3,
            min_lr: 1e-4,
            momentum: 0.9,
            weight_decay: 1e-4,
            model: ModelConfig::default(),
            period: 288,
            prune: PruneConfig::default(),
            plan_dir: None,
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val: EvalResult,
    pub samples_processed: usize,
    pub wall_clock_ms: f64,
    pub mean_weight: f64,
    pub weight_sum: f64,
    pub informative: usize,
    pub retained_redundant: usize,
    pub pruned: usize,
    pub full_epoch: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ForecasterParams,
    pub optimizer: OptimizerState,
    pub rng_states: Vec<RngState>,
    pub records: Vec<EpochRecord>,
    pub test: EvalResult,
}

/// Accuracy of `params` over a sample list, all horizons jointly.
pub fn evaluate_samples(
    params: &ForecasterParams,
    samples: &[WindowedSample],
) -> Result<EvalResult> {
    let preds = params.predict(samples)?;
    let pred: Vec<f64> = preds.into_iter().flatten().collect();
    let truth: Vec<f64> = samples.iter().flat_map(|s| s.y.iter().copied()).collect();
    evaluate(&pred, &truth)
}

pub fn train(split: &DatasetSplit, cfg: &TrainConfig, rng: &SeededRng) -> Result<TrainOutcome> {
    cfg.prune.validate()?;
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Config(
            "epochs and batch_size must be positive".into(),
        ));
    }
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dims = ModelDims {
        shape: split.shape,
        period: cfg.period,
        hidden: cfg.model.hidden,
        embed: cfg.model.embed,
    };
    let mut init_rng = rng.stream(Stream::Init);
    let mut params =
        ForecasterParams::init(cfg.model.arch, dims, split.stats.clone(), &mut init_rng)?;
    let mut opt = OptimizerState::new(params.len(), cfg.base_lr, cfg.min_lr, cfg.epochs);
    opt.momentum = cfg.momentum;
    opt.weight_decay = cfg.weight_decay;

    let prune_rng = rng.stream(Stream::Prune);
    let shuffle_rng = rng.stream(Stream::Shuffle);
    let intensities: Vec<f64> = split.train.iter().map(|s| s.intensity).collect();
    let ctx = PlanContext {
        total_epochs: cfg.epochs,
        train_size: split.train.len(),
        intensities: &intensities,
        mean_intensity: split.mean_train_intensity(),
        rng: &prune_rng,
    };
    if let Some(dir) = &cfg.plan_dir {
        std::fs::create_dir_all(dir)?;
    }

    let lambda = cfg.prune.scoring_lambda();
    let mut scores: Vec<Option<SampleScore>> = vec![None; split.train.len()];
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        opt.schedule_t = epoch - 1;
        let plan = plan_for_epoch(epoch, &ctx, &scores, &cfg.prune)?;
        if let Some(dir) = &cfg.plan_dir {
            plan.write_csv(&dir.join(format!("epoch_{epoch}.csv")))?;
        }

        let mut order = plan.retained.clone();
        shuffle_rng.fork(epoch as u64).shuffle(&mut order);

        let mut loss_acc = 0.0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(&WindowedSample, f64)> =
                chunk.iter().map(|&(i, w)| (&split.train[i], w)).collect();
            let result = params.weighted_loss_and_grads(&batch)?;
            if !result.loss.is_finite() || result.grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    detail: format!(
                        "loss {} (lr {:.3e}, batch weight {:.3})",
                        result.loss,
                        opt.lr(),
                        result.weight_sum
                    ),
                });
            }
            sgd_step(&mut params, &result.grads, &mut opt)?;
            loss_acc += result.loss * result.weight_sum;
            for em in &result.errors {
                scores[em.index()] = Some(score_sample(em, lambda, epoch)?);
            }
        }
        let weight_sum = plan.weight_sum();
        let val = evaluate_samples(&params, &split.val)?;
        if !val.mae.is_finite() {
            return Err(Error::Divergence {
                epoch,
                step: 0,
                detail: "validation error is not finite".into(),
            });
        }
        let record = EpochRecord {
            epoch,
            lr: opt.lr(),
            train_loss: loss_acc / weight_sum,
            val,
            samples_processed: plan.retained.len(),
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
            mean_weight: plan.mean_weight(),
            weight_sum,
            informative: plan.informative_count(),
            retained_redundant: plan.retained_redundant_count(),
            pruned: plan.pruned_count,
            full_epoch: plan.is_full_epoch,
        };
        debug!(
            "epoch {epoch}: loss {:.4} val mae {:.4} samples {} mean w {:.3}",
            record.train_loss, record.val.mae, record.samples_processed, record.mean_weight
        );
        records.push(record);
    }

    let test = evaluate_samples(&params, &split.test)?;
    Ok(TrainOutcome {
        params,
        optimizer: opt,
        rng_states: vec![init_rng.state(), prune_rng.state(), shuffle_rng.state()],
        records,
        test,
    })
}
