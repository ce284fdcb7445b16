use std::f64::consts::PI;

use super::ForecasterParams;
use crate::error::{Error, Result};

/// SGD with momentum, L2 weight decay and a cosine learning-rate schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub momentum_buf: Vec<f64>,
    /// Number of parameter updates taken so far.
    pub step_count: u64,
    pub base_lr: f64,
    pub min_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Schedule length (epochs).
    pub horizon: usize,
    /// Current position in the schedule, `0..=horizon`.
    pub schedule_t: usize,
}

impl OptimizerState {
    pub fn new(num_params: usize, base_lr: f64, min_lr: f64, horizon: usize) -> Self {
        Self {
            momentum_buf: vec![0.0; num_params],
            step_count: 0,
            base_lr,
            min_lr,
            momentum: 0.9,
            weight_decay: 1e-4,
            horizon,
            schedule_t: 0,
        }
    }

    /// `min_lr + (base_lr - min_lr) (1 + cos(pi t / horizon)) / 2`.
    pub fn lr(&self) -> f64 {
        if self.horizon == 0 {
            return self.base_lr;
        }
        let t = self.schedule_t.min(self.horizon) as f64 / self.horizon as f64;
        self.min_lr + 0.5 * (self.base_lr - self.min_lr) * (1.0 + (PI * t).cos())
    }
}

pub fn sgd_step(
    params: &mut ForecasterParams,
    grads: &[f64],
    opt: &mut OptimizerState,
) -> Result<()> {
    if grads.len() != params.len() || opt.momentum_buf.len() != params.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} params, {} grads, {} momentum slots",
            params.len(),
            grads.len(),
            opt.momentum_buf.len()
        )));
    }
    let lr = opt.lr();
    let (mu, wd) = (opt.momentum, opt.weight_decay);
    for ((p, &g), buf) in params
        .as_mut_slice()
        .iter_mut()
        .zip(grads)
        .zip(opt.momentum_buf.iter_mut())
    {
        *buf = mu * *buf + (g + wd * *p);
        *p -= lr * *buf;
    }
    opt.step_count += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{NormStats, WindowShape};
    use crate::model::{Architecture, ModelDims};

    fn params() -> ForecasterParams {
        let dims = ModelDims {
            shape: WindowShape {
                nodes: 1,
                input_len: 2,
                horizon: 1,
                features: 1,
            },
            period: 1,
            hidden: 0,
            embed: 0,
        };
        let stats = NormStats {
            mean: vec![0.0],
            std: vec![1.0],
        };
        ForecasterParams::from_parts(Architecture::Linear, dims, stats, vec![0.5, -1.0, 2.0])
            .unwrap()
    }

    #[test]
    fn cosine_endpoints() {
        let mut opt = OptimizerState::new(3, 1e-3, 1e-4, 100);
        assert_eq!(opt.lr(), 1e-3);
        opt.schedule_t = 100;
        assert!((opt.lr() - 1e-4).abs() < 1e-18);
        opt.schedule_t = 50;
        assert!((opt.lr() - 5.5e-4).abs() < 1e-15);
    }

    #[test]
    fn zero_grads_without_decay_leave_params() {
        let mut p = params();
        let before = p.clone();
        let mut opt = OptimizerState::new(3, 1e-3, 1e-4, 10);
        opt.weight_decay = 0.0;
        sgd_step(&mut p, &[0.0; 3], &mut opt).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_lr_times_grad() {
        let mut p = params();
        let mut opt = OptimizerState::new(3, 0.1, 0.01, 10);
        opt.weight_decay = 0.0;
        let g = [1.0, -2.0, 0.5];
        sgd_step(&mut p, &g, &mut opt).unwrap();
        let expect = [0.5 - 0.1, -1.0 + 0.2, 2.0 - 0.05];
        for (a, b) in p.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // second step: buf = 0.9 g + g
        sgd_step(&mut p, &g, &mut opt).unwrap();
        assert!((p.as_slice()[0] - (0.4 - 0.1 * 1.9)).abs() < 1e-15);
        assert_eq!(opt.step_count, 2);
    }

    #[test]
    fn weight_decay_enters_buffer() {
        let mut p = params();
        let mut opt = OptimizerState::new(3, 1.0, 1.0, 1);
        sgd_step(&mut p, &[0.0; 3], &mut opt).unwrap();
        assert!((opt.momentum_buf[2] - 2e-4).abs() < 1e-18);
        assert!(sgd_step(&mut p, &[0.0; 2], &mut opt).is_err());
    }
}
