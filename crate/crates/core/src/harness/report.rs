use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{work_counters, EvalResult};
use crate::model::EpochRecord;
use crate::pruning::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub records: Vec<EpochRecord>,
    pub test: EvalResult,
}

impl SeedReport {
    pub fn samples_processed(&self) -> usize {
        self.records.iter().map(|r| r.samples_processed).sum()
    }

    pub fn wall_clock_ms(&self) -> f64 {
        self.records.iter().map(|r| r.wall_clock_ms).sum()
    }
}

/// Seed means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub test_mae: f64,
    pub test_rmse: f64,
    /// Present only when every seed defines it.
    pub test_mape_pct: Option<f64>,
    pub test_corr: Option<f64>,
    pub samples_processed: f64,
    pub val_mae_by_epoch: Vec<f64>,
    pub wall_clock_ms: f64,
}

impl Aggregate {
    pub fn from_seeds(seeds: &[SeedReport]) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = seeds.len() as f64;
        let avg = |f: &dyn Fn(&SeedReport) -> f64| seeds.iter().map(f).sum::<f64>() / n;
        let avg_opt = |f: &dyn Fn(&SeedReport) -> Option<f64>| {
            seeds
                .iter()
                .map(f)
                .sum::<Option<f64>>()
                .map(|total| total / n)
        };
        let epochs = seeds[0].records.len();
        if seeds.iter().any(|s| s.records.len() != epochs) {
            return Err(Error::ShapeMismatch(
                "seeds disagree on the number of epochs".into(),
            ));
        }
        Ok(Self {
            test_mae: avg(&|s| s.test.mae),
            test_rmse: avg(&|s| s.test.rmse),
            test_mape_pct: avg_opt(&|s| s.test.mape_pct),
            test_corr: avg_opt(&|s| s.test.corr),
            samples_processed: avg(&|s| s.samples_processed() as f64),
            val_mae_by_epoch: (0..epochs)
                .map(|e| avg(&|s| s.records[e].val.mae))
                .collect(),
            wall_clock_ms: avg(&|s| s.wall_clock_ms()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Config {
        hash: String,
        config: Box<ExperimentConfig>,
    },
    Epoch {
        seed: u64,
        record: EpochRecord,
    },
    Seed {
        seed: u64,
        test: EvalResult,
        samples_processed: usize,
        wall_clock_ms: f64,
    },
    Aggregate(Aggregate),
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "label",
    "policy",
    "retention",
    "ablation",
    "seed",
    "epochs",
    "samples_processed",
    "test_mae",
    "test_rmse",
    "test_mape_pct",
    "test_corr",
    "wall_clock_ms",
];

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, seeds: Vec<SeedReport>) -> Result<Self> {
        Ok(Self {
            config_hash: config.content_hash()?,
            aggregate: Aggregate::from_seeds(&seeds)?,
            config,
            seeds,
        })
    }

    /// Nominal fraction of pruned data kept; 1 for full training.
    pub fn retention(&self) -> f64 {
        match self.config.prune.policy {
            Policy::None => 1.0,
            _ => self.config.prune.retention(),
        }
    }

    /// `policy[:ablation]@retention`, unique within a sweep.
    pub fn label(&self) -> String {
        let p = &self.config.prune;
        if p.policy == Policy::None {
            return "none".into();
        }
        let mut label = p.policy.name().to_string();
        let ab = p.ablations.label();
        if ab != "full" {
            label = format!("{label}:{ab}");
        }
        format!("{label}@{}", self.retention())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let mut line = |l: &Line| -> Result<()> {
            serde_json::to_writer(&mut out, l)?;
            out.push(b'\n');
            Ok(())
        };
        line(&Line::Config {
            hash: self.config_hash.clone(),
            config: Box::new(self.config.clone()),
        })?;
        for s in &self.seeds {
            for r in &s.records {
                line(&Line::Epoch {
                    seed: s.seed,
                    record: r.clone(),
                })?;
            }
            line(&Line::Seed {
                seed: s.seed,
                test: s.test,
                samples_processed: s.samples_processed(),
                wall_clock_ms: s.wall_clock_ms(),
            })?;
        }
        line(&Line::Aggregate(self.aggregate.clone()))?;
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let mut config = None;
        let mut seeds: Vec<SeedReport> = Vec::new();
        let mut pending: Vec<EpochRecord> = Vec::new();
        for (i, text) in BufReader::new(file).lines().enumerate() {
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            match serde_json::from_str::<Line>(&text).map_err(|e| parse_err(e.to_string()))? {
                Line::Config { hash, config: c } => config = Some((hash, *c)),
                Line::Epoch { record, .. } => pending.push(record),
                Line::Seed { seed, test, .. } => seeds.push(SeedReport {
                    seed,
                    records: std::mem::take(&mut pending),
                    test,
                }),
                Line::Aggregate(_) => {}
            }
        }
        let (hash, config) = config.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "missing config line".into(),
        })?;
        Ok(Self {
            aggregate: Aggregate::from_seeds(&seeds)?,
            config_hash: hash,
            config,
            seeds,
        })
    }

    /// One row per seed plus a `mean` row. Wall-clock is the last column.
    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SUMMARY_HEADER)?;
        let p = &self.config.prune;
        let fixed = [
            self.label(),
            p.policy.name().to_string(),
            self.retention().to_string(),
            p.ablations.label(),
        ];
        for s in &self.seeds {
            let mut row = fixed.to_vec();
            row.extend([
                s.seed.to_string(),
                s.records.len().to_string(),
                s.samples_processed().to_string(),
                s.test.mae.to_string(),
                s.test.rmse.to_string(),
                fmt_opt(s.test.mape_pct),
                fmt_opt(s.test.corr),
                s.wall_clock_ms().to_string(),
            ]);
            w.write_record(&row)?;
        }
        let a = &self.aggregate;
        let mut row = fixed.to_vec();
        row.extend([
            "mean".to_string(),
            self.config.epochs.to_string(),
            a.samples_processed.to_string(),
            a.test_mae.to_string(),
            a.test_rmse.to_string(),
            fmt_opt(a.test_mape_pct),
            fmt_opt(a.test_corr),
            a.wall_clock_ms.to_string(),
        ]);
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_epochs_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(
            out,
            "seed,epoch,lr,train_loss,val_mae,val_rmse,val_mape_pct,val_corr,samples_processed,cumulative_samples,mean_weight,weight_sum,informative,retained_redundant,pruned,full_epoch,wall_clock_ms"
        )?;
        for s in &self.seeds {
            let counters = work_counters(
                s.records
                    .iter()
                    .map(|r| (r.samples_processed, r.wall_clock_ms)),
            );
            for (r, cum) in s.records.iter().zip(&counters.cumulative) {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.seed,
                    r.epoch,
                    r.lr,
                    r.train_loss,
                    r.val.mae,
                    r.val.rmse,
                    fmt_opt(r.val.mape_pct),
                    fmt_opt(r.val.corr),
                    r.samples_processed,
                    cum,
                    r.mean_weight,
                    r.weight_sum,
                    r.informative,
                    r.retained_redundant,
                    r.pruned,
                    r.full_epoch,
                    r.wall_clock_ms
                )?;
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}
