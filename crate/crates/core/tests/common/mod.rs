//! Finite-difference gradient checker shared by test targets.
#![allow(dead_code)]

use stprune::dataset::{NormStats, WindowShape, WindowedSample};
use stprune::model::{Architecture, ForecasterParams, ModelDims};
use stprune::numerics::SeededRng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;

fn random_samples(shape: &WindowShape, count: usize, rng: &mut SeededRng) -> Vec<WindowedSample> {
    (0..count)
        .map(|i| WindowedSample {
            index: i,
            start_frame: rng.below(50),
            x: (0..shape.input_size()).map(|_| rng.normal()).collect(),
            y: (0..shape.target_size())
                .map(|_| 20.0 + 5.0 * rng.normal())
                .collect(),
            intensity: 0.0,
        })
        .collect()
}

fn loss(params: &ForecasterParams, batch: &[(&WindowedSample, f64)]) -> f64 {
    params.weighted_loss_and_grads(batch).unwrap().loss
}

/// Returns (checked coordinates, worst relative error).
pub fn check(arch: Architecture, dims: ModelDims, seed: u64) -> (usize, f64) {
    let mut rng = SeededRng::new(seed);
    let stats = NormStats {
        mean: vec![19.0; dims.shape.features],
        std: vec![4.0; dims.shape.features],
    };
    let mut params = ForecasterParams::init(arch, dims, stats, &mut rng).unwrap();
    // move biases and embeddings off zero too
    for v in params.as_mut_slice() {
        *v += 0.05 * rng.normal();
    }
    let samples = random_samples(&dims.shape, 3, &mut rng);
    let batch: Vec<(&WindowedSample, f64)> = samples
        .iter()
        .map(|s| (s, rng.uniform_range(0.5, 3.0)))
        .collect();
    let analytic = params.weighted_loss_and_grads(&batch).unwrap().grads;

    let mut checked = 0;
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        if a.abs() <= 1e-6 {
            continue;
        }
        let orig = params.as_slice()[k];
        params.as_mut_slice()[k] = orig + H;
        let up = loss(&params, &batch);
        params.as_mut_slice()[k] = orig - H;
        let down = loss(&params, &batch);
        params.as_mut_slice()[k] = orig;
        let numeric = (up - down) / (2.0 * H);
        let rel = (numeric - a).abs() / a.abs();
        worst = worst.max(rel);
        checked += 1;
    }
    (checked, worst)
}

pub fn shape(features: usize) -> WindowShape {
    WindowShape {
        nodes: 3,
        input_len: 4,
        horizon: 2,
        features,
    }
}
