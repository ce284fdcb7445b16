//! Experiment configuration files.
//!
//! A config is a TOML document. Every section is optional and unknown keys
//! are rejected. Relative paths resolve against the config file's directory.
//!
//! ```toml
//! seeds = [1, 2, 3]
//! epochs = 100
//! batch_size = 256
//! output_dir = "runs/example"
//!
//! [data]
//! path = "traffic.csv"          # or a [data.synth] table
//! input_len = 12
//! horizon = 12
//! split = [0.6, 0.2, 0.2]
//!
//! [model]
//! arch = "mlp_id"               # or "linear"
//! hidden = 32
//! embed = 8
//!
//! [optimizer]
//! base_lr = 1e-3
//! min_lr = 1e-4
//! momentum = 0.9
//! weight_decay = 1e-4
//!
//! [prune]
//! policy = "st_prune"           # none, hard_random, soft_random, loss_mean_uniform
//! lambda = 0.5
//! prune_ratio = 0.5
//! anneal_cutoff = 0.9
//!
//! [prune.ablations]
//! disable_complexity = false
//!
//! [analysis]
//! enabled = true
//! bins = 20
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{load_dataset, synthesize, RawSeries, SynthSpec};
use crate::error::{Error, Result};
use crate::model::{Architecture, ModelConfig, TrainConfig};
use crate::numerics::{SeededRng, Stream};
use crate::pruning::PruneConfig;

const DEFAULT_PERIOD: usize = 288;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// CSV or STB file.
    pub path: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    /// Seed for the synthetic series. Unset means each run seed draws its own.
    pub synth_seed: Option<u64>,
    pub input_len: usize,
    pub horizon: usize,
    pub split: [f64; 3],
    /// Frames per day. Defaults to the synthetic period, else 288.
    pub period: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            synth: None,
            synth_seed: None,
            input_len: 12,
            horizon: 12,
            split: [0.6, 0.2, 0.2],
            period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub base_lr: f64,
    pub min_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            base_lr: 1e-3,
            min_lr: 1e-4,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub enabled: bool,
    pub bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub output_dir: PathBuf,
    /// Write every epoch plan under `<output_dir>/seed_<s>/plans`.
    pub write_plans: bool,
    pub save_checkpoints: bool,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub prune: PruneConfig,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            epochs: 100,
            batch_size: 256,
            output_dir: PathBuf::from("stprune_out"),
            write_plans: false,
            save_checkpoints: false,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            optimizer: OptimizerConfig::default(),
            prune: PruneConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        if let Some(p) = &self.data.path {
            if p.is_relative() {
                self.data.path = Some(base.join(p));
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return fail("seeds must be distinct".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        match (&self.data.path, &self.data.synth) {
            (Some(_), Some(_)) => return fail("data.path and data.synth are exclusive".into()),
            (None, None) => return fail("data needs either path or synth".into()),
            (None, Some(spec)) => spec.validate().map_err(|e| e.context("data.synth"))?,
            (Some(_), None) => {}
        }
        if self.data.input_len == 0 || self.data.horizon == 0 {
            return fail("data.input_len and data.horizon must be positive".into());
        }
        let [a, b, c] = self.data.split;
        if [a, b, c].iter().any(|r| !(*r > 0.0 && *r < 1.0)) || (a + b + c - 1.0).abs() > 1e-9 {
            return fail(format!(
                "data.split {a}:{b}:{c} must be positive and sum to 1"
            ));
        }
        if self.data.period == Some(0) {
            return fail("data.period must be positive".into());
        }
        if self.model.arch == Architecture::MlpId
            && (self.model.hidden == 0 || self.model.embed == 0)
        {
            return fail("model.hidden and model.embed must be positive for mlp_id".into());
        }
        let o = &self.optimizer;
        if !(o.base_lr > 0.0 && o.base_lr.is_finite()) {
            return fail(format!("optimizer.base_lr {} must be > 0", o.base_lr));
        }
        if !(o.min_lr >= 0.0 && o.min_lr <= o.base_lr) {
            return fail(format!(
                "optimizer.min_lr {} must be in [0, base_lr]",
                o.min_lr
            ));
        }
        if !(0.0..1.0).contains(&o.momentum) {
            return fail(format!(
                "optimizer.momentum {} must be in [0, 1)",
                o.momentum
            ));
        }
        if !(o.weight_decay >= 0.0 && o.weight_decay.is_finite()) {
            return fail(format!(
                "optimizer.weight_decay {} must be >= 0",
                o.weight_decay
            ));
        }
        if self.analysis.bins == 0 {
            return fail("analysis.bins must be positive".into());
        }
        self.prune.validate().map_err(|e| e.context("prune"))
    }

    pub fn period(&self) -> usize {
        self.data
            .period
            .or(self.data.synth.as_ref().map(|s| s.period))
            .unwrap_or(DEFAULT_PERIOD)
    }

    pub fn train_config(&self, plan_dir: Option<PathBuf>) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            base_lr: self.optimizer.base_lr,
            min_lr: self.optimizer.min_lr,
            momentum: self.optimizer.momentum,
            weight_decay: self.optimizer.weight_decay,
            model: self.model.clone(),
            period: self.period(),
            prune: self.prune.clone(),
            plan_dir,
        }
    }

    /// The series a given run seed trains on.
    pub fn load_series(&self, seed: u64) -> Result<RawSeries> {
        match (&self.data.path, &self.data.synth) {
            (Some(path), _) => load_dataset(path),
            (None, Some(spec)) => {
                let data_seed = self.data.synth_seed.unwrap_or(seed);
                synthesize(spec, &mut SeededRng::new(data_seed).stream(Stream::Data))
            }
            (None, None) => Err(Error::Config("data needs either path or synth".into())),
        }
    }
}
