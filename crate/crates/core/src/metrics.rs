//! Evaluation formulas and work counters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAPE_FLOOR: f64 = 1e-3;

/// Forecast accuracy over a flat list of paired targets.
///
/// `mape_pct` is `None` when no target clears the zero guard and `corr` is
/// `None` when either side is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mae: f64,
    pub rmse: f64,
    pub mape_pct: Option<f64>,
    pub corr: Option<f64>,
    pub n: usize,
}

pub fn evaluate(pred: &[f64], truth: &[f64]) -> Result<EvalResult> {
    evaluate_with_floor(pred, truth, DEFAULT_MAPE_FLOOR)
}

pub fn evaluate_with_floor(pred: &[f64], truth: &[f64], mape_floor: f64) -> Result<EvalResult> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "non-finite value in evaluation".into(),
        ));
    }
    let n = pred.len() as f64;
    let (mut abs, mut sq, mut pct, mut pct_n) = (0.0, 0.0, 0.0, 0usize);
    for (&p, &y) in pred.iter().zip(truth) {
        let e = p - y;
        abs += e.abs();
        sq += e * e;
        if y.abs() > mape_floor {
            pct += (e / y).abs();
            pct_n += 1;
        }
    }
    Ok(EvalResult {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        mape_pct: (pct_n > 0).then(|| 100.0 * pct / pct_n as f64),
        corr: crate::numerics::pearson(truth, pred).ok(),
        n: pred.len(),
    })
}

/// Per-epoch and cumulative sample-gradient work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub per_epoch: Vec<usize>,
    pub cumulative: Vec<usize>,
    pub wall_clock_ms: Vec<f64>,
}

impl WorkCounters {
    pub fn total(&self) -> usize {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

/// Folds a stream of `(samples processed, wall-clock ms)` epoch records.
pub fn work_counters(epochs: impl IntoIterator<Item = (usize, f64)>) -> WorkCounters {
    let mut counters = WorkCounters {
        per_epoch: Vec::new(),
        cumulative: Vec::new(),
        wall_clock_ms: Vec::new(),
    };
    let mut total = 0usize;
    for (samples, ms) in epochs {
        total += samples;
        counters.per_epoch.push(samples);
        counters.cumulative.push(total);
        counters.wall_clock_ms.push(ms);
    }
    counters
}
