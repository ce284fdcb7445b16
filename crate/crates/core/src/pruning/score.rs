use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ErrorMatrix;
use crate::numerics::pop_std;

/// Complexity score of one sample: `h = mu + lambda * (sigma_space + sigma_time)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub index: usize,
    /// Global mean absolute error.
    pub mu: f64,
    /// Spread of the per-node mean errors.
    pub sigma_space: f64,
    /// Spread of the per-step mean errors.
    pub sigma_time: f64,
    pub h: f64,
    pub epoch: usize,
}

pub fn score_sample(errors: &ErrorMatrix, lambda: f64, epoch: usize) -> Result<SampleScore> {
    let (nodes, steps) = (errors.nodes(), errors.horizon());
    let values = errors.values();
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::NegativeError(v));
    }
    let node_means: Vec<f64> = values
        .chunks_exact(steps)
        .map(crate::numerics::mean)
        .collect::<Result<_>>()?;
    let step_means: Vec<f64> = (0..steps)
        .map(|t| (0..nodes).map(|n| values[n * steps + t]).sum::<f64>() / nodes as f64)
        .collect();
    let mu = crate::numerics::mean(values)?;
    let sigma_space = pop_std(&node_means)?;
    let sigma_time = pop_std(&step_means)?;
    Ok(SampleScore {
        index: errors.index(),
        mu,
        sigma_space,
        sigma_time,
        h: mu + lambda * (sigma_space + sigma_time),
        epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn em(rows: &[Vec<f64>]) -> ErrorMatrix {
        ErrorMatrix::new(0, rows.len(), rows[0].len(), rows.concat()).unwrap()
    }

    #[test]
    fn hand_computed_score() {
        let s = score_sample(&em(&[vec![1.0, 3.0], vec![5.0, 7.0]]), 0.5, 2).unwrap();
        assert_eq!(s.mu, 4.0);
        assert_eq!(s.sigma_space, 2.0);
        assert_eq!(s.sigma_time, 1.0);
        assert_eq!(s.h, 5.5);
        assert_eq!(s.epoch, 2);
    }

    #[test]
    fn constant_field_scores_its_value() {
        for lambda in [0.0, 0.5, 3.0] {
            let s = score_sample(&em(&vec![vec![2.7; 5]; 4]), lambda, 1).unwrap();
            assert_eq!(s.h, 2.7);
        }
    }

    #[test]
    fn masking_effect_pair() {
        // Same global mean 17.1: a uniform field and a field with one hot node.
        let uniform = em(&vec![vec![17.1; 12]; 10]);
        let mut rows = vec![vec![10.0; 12]; 10];
        rows[3] = vec![17.1 * 10.0 - 9.0 * 10.0; 12];
        let spiky = em(&rows);
        let (u, s) = (
            score_sample(&uniform, 0.5, 1).unwrap(),
            score_sample(&spiky, 0.5, 1).unwrap(),
        );
        assert!((u.mu - s.mu).abs() < 1e-12);
        assert!(s.h > u.h);
    }

    #[test]
    fn negative_entries_rejected() {
        let err = score_sample(&em(&[vec![1.0, -0.5]]), 0.5, 1).unwrap_err();
        assert!(err.to_string().contains("not an absolute-error field"));
    }
}
