use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentReport, SeedReport};
use crate::analysis::redundancy_report;
use crate::dataset::{chrono_split, make_windows, DatasetSplit};
use crate::error::{Error, Result};
use crate::model::{train, Checkpoint, TrainOutcome};
use crate::numerics::SeededRng;
use crate::pruning::{Ablations, Policy};

pub const REPORT_FILE: &str = "report.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const REDUNDANCY_FILE: &str = "redundancy_report.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

fn build_split(cfg: &ExperimentConfig, seed: u64) -> Result<DatasetSplit> {
    let series = cfg.load_series(seed)?;
    let [a, b, c] = cfg.data.split;
    chrono_split(&series, (a, b, c), cfg.data.input_len, cfg.data.horizon)
}

fn write_analysis(cfg: &ExperimentConfig) -> Result<()> {
    let series = cfg.load_series(cfg.seeds[0])?;
    let train_frames = (cfg.data.split[0] * series.num_frames() as f64 + 1e-9).floor() as usize;
    let train_span = series.slice_frames(0, train_frames)?;
    let (_, samples) = make_windows(&train_span, cfg.data.input_len, cfg.data.horizon)?;
    let report = redundancy_report(&train_span, &samples, 0, cfg.period(), cfg.analysis.bins)?;
    info!(
        "redundancy: {:.1}% of node pairs correlate >= 0.8, {} spatial components reach 90% variance",
        100.0 * report.frac_pairs_ge_08,
        report
            .spatial_explained
            .iter()
            .position(|&v| v >= 0.9)
            .map_or(report.spatial_explained.len(), |k| k + 1)
    );
    report.write_csv(&cfg.output_dir.join(REDUNDANCY_FILE))
}

/// Samples processed in pruned epochs must equal the plan's retained set.
fn check_work_accounting(outcome: &TrainOutcome, train_size: usize, policy: Policy) -> Result<()> {
    for r in &outcome.records {
        let expected = if r.full_epoch {
            train_size
        } else {
            match policy {
                Policy::StPrune | Policy::LossMeanUniform => r.informative + r.retained_redundant,
                _ => train_size - r.pruned,
            }
        };
        if r.samples_processed != expected || r.samples_processed + r.pruned != train_size {
            return Err(Error::ShapeMismatch(format!(
                "epoch {}: {} samples processed, plan accounts for {expected}",
                r.epoch, r.samples_processed
            )));
        }
    }
    Ok(())
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedReport> {
    let split = build_split(cfg, seed)?;
    let seed_dir = cfg.output_dir.join(format!("seed_{seed}"));
    let plan_dir = cfg.write_plans.then(|| seed_dir.join("plans"));
    let outcome = train(&split, &cfg.train_config(plan_dir), &SeededRng::new(seed))?;
    check_work_accounting(&outcome, split.train.len(), cfg.prune.policy)?;
    if cfg.save_checkpoints {
        std::fs::create_dir_all(&seed_dir)?;
        Checkpoint {
            params: outcome.params.clone(),
            optimizer: outcome.optimizer.clone(),
            rng_states: outcome.rng_states.clone(),
        }
        .save(&seed_dir.join("final.ckpt"))?;
    }
    info!(
        "seed {seed}: test MAE {:.4}, {} samples processed",
        outcome.test.mae,
        outcome
            .records
            .iter()
            .map(|r| r.samples_processed)
            .sum::<usize>()
    );
    Ok(SeedReport {
        seed,
        records: outcome.records,
        test: outcome.test,
    })
}

/// Trains every seed and writes `report.jsonl`, `summary.csv` and
/// `epochs.csv` into the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    if cfg.analysis.enabled {
        write_analysis(cfg).map_err(|e| e.context("analysis"))?;
    }
    let seeds: Vec<SeedReport> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, seed).map_err(|e| e.context(format!("seed {seed}"))))
        .collect::<Result<_>>()?;
    let report = ExperimentReport::new(cfg.clone(), seeds)?;
    report.write_jsonl(&cfg.output_dir.join(REPORT_FILE))?;
    report.write_summary_csv(&cfg.output_dir.join(SUMMARY_FILE))?;
    report.write_epochs_csv(&cfg.output_dir.join(EPOCHS_FILE))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Fractions kept, `1 - prune_ratio`.
    Retention(Vec<f64>),
    Policy(Vec<Policy>),
    Ablation(Vec<Ablations>),
}

impl SweepAxis {
    pub fn default_retention() -> Self {
        SweepAxis::Retention(vec![0.1, 0.3, 0.5, 0.7])
    }

    pub fn default_policies() -> Self {
        SweepAxis::Policy(Policy::ALL.to_vec())
    }

    /// Full policy and the three single-component ablations.
    pub fn default_ablations() -> Self {
        let off = Ablations::default();
        SweepAxis::Ablation(vec![
            off,
            Ablations {
                disable_complexity: true,
                ..off
            },
            Ablations {
                disable_rescale: true,
                ..off
            },
            Ablations {
                disable_anneal: true,
                ..off
            },
        ])
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Retention(_) => "retention",
            SweepAxis::Policy(_) => "policy",
            SweepAxis::Ablation(_) => "ablation",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Retention(v) => v.len(),
            SweepAxis::Policy(v) => v.len(),
            SweepAxis::Ablation(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(cell label, config)` per axis value.
    fn cells(&self, base: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c
        };
        match self {
            SweepAxis::Retention(v) => v
                .iter()
                .map(|&keep| {
                    (
                        format!("retention_{keep}"),
                        with(&|c| c.prune.prune_ratio = 1.0 - keep),
                    )
                })
                .collect(),
            SweepAxis::Policy(v) => v
                .iter()
                .map(|&p| (p.name().to_string(), with(&|c| c.prune.policy = p)))
                .collect(),
            SweepAxis::Ablation(v) => v
                .iter()
                .map(|&a| {
                    (
                        a.label(),
                        with(&|c| {
                            c.prune.policy = Policy::StPrune;
                            c.prune.ablations = a;
                        }),
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct SweepCell {
    pub label: String,
    pub outcome: Result<ExperimentReport>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub axis: &'static str,
    pub reference: ExperimentReport,
    pub cells: Vec<SweepCell>,
}

/// One run per axis value plus a full-data reference run. Failed cells are
/// recorded and the sweep carries on.
pub fn sweep(base: &ExperimentConfig, axis: &SweepAxis) -> Result<SweepResult> {
    if axis.is_empty() {
        return Err(Error::Config(format!(
            "sweep axis {} is empty",
            axis.name()
        )));
    }
    base.validate()?;
    let cells = axis.cells(base);
    for (label, cfg) in &cells {
        cfg.validate()
            .map_err(|e| e.context(format!("sweep cell {label}")))?;
    }
    std::fs::create_dir_all(&base.output_dir)?;

    let mut reference_cfg = base.clone();
    reference_cfg.prune.policy = Policy::None;
    reference_cfg.output_dir = base.output_dir.join("reference");
    let reference = run(&reference_cfg).map_err(|e| e.context("reference run"))?;

    let cells: Vec<SweepCell> = cells
        .into_iter()
        .map(|(label, mut cfg)| {
            cfg.output_dir = base.output_dir.join(&label);
            let outcome = run(&cfg);
            if let Err(e) = &outcome {
                warn!("sweep cell {label} failed: {e}");
            }
            SweepCell { label, outcome }
        })
        .collect();
    let result = SweepResult {
        axis: axis.name(),
        reference,
        cells,
    };
    result.write_csv(&base.output_dir.join(SWEEP_FILE))?;
    Ok(result)
}

fn pct_change(value: f64, reference: f64) -> String {
    if reference == 0.0 {
        "NA".into()
    } else {
        format!("{:+.2}", 100.0 * (value - reference) / reference)
    }
}

impl SweepResult {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "axis",
            "cell",
            "status",
            "policy",
            "retention",
            "ablation",
            "samples_processed",
            "work_change_pct",
            "test_mae",
            "mae_change_pct",
            "test_rmse",
            "rmse_change_pct",
            "test_mape_pct",
            "mape_change_pct",
            "error",
        ])?;
        let r = &self.reference.aggregate;
        for cell in &self.cells {
            let row: Vec<String> = match &cell.outcome {
                Ok(rep) => {
                    let a = &rep.aggregate;
                    let p = &rep.config.prune;
                    vec![
                        self.axis.into(),
                        cell.label.clone(),
                        "ok".into(),
                        p.policy.name().into(),
                        rep.retention().to_string(),
                        p.ablations.label(),
                        a.samples_processed.to_string(),
                        pct_change(a.samples_processed, r.samples_processed),
                        a.test_mae.to_string(),
                        pct_change(a.test_mae, r.test_mae),
                        a.test_rmse.to_string(),
                        pct_change(a.test_rmse, r.test_rmse),
                        super::report::fmt_opt(a.test_mape_pct),
                        match (a.test_mape_pct, r.test_mape_pct) {
                            (Some(v), Some(base)) => pct_change(v, base),
                            _ => "NA".into(),
                        },
                        String::new(),
                    ]
                }
                Err(e) => {
                    let mut row = vec![self.axis.to_string(), cell.label.clone(), "failed".into()];
                    row.extend(std::iter::repeat_n("NA".to_string(), 11));
                    row.push(e.to_string());
                    row
                }
            };
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn reports(&self) -> impl Iterator<Item = &ExperimentReport> {
        std::iter::once(&self.reference)
            .chain(self.cells.iter().filter_map(|c| c.outcome.as_ref().ok()))
    }
}
