//! Forecasters with manual gradients, SGD and the pruned training loop.

mod checkpoint;
mod forecaster;
mod optim;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use forecaster::{Architecture, BatchResult, ForecasterParams, ModelDims};
pub use optim::{sgd_step, OptimizerState};
pub use train::{evaluate_samples, train, EpochRecord, ModelConfig, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};

/// Feature-averaged absolute errors `[N x T_f]` of one sample, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    index: usize,
    nodes: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl ErrorMatrix {
    pub fn new(index: usize, nodes: usize, horizon: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nodes * horizon {
            return Err(Error::ShapeMismatch(format!(
                "{} errors for {nodes} nodes x {horizon} steps",
                values.len()
            )));
        }
        Ok(Self {
            index,
            nodes,
            horizon,
            values,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}
