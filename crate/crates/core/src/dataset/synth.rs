//! Synthetic sensor networks with controlled redundancy.
//!
//! Generative recipe, per node `n` and frame `t` (one feature):
//!
//! ```text
//! value(t, n) = base_n + sum_j loading[n][j] * latent_j(t) + noise * z(t, n) + anomaly(t, n)
//! latent_j(t) = day_gain_j(t / period) * profile_j(t mod period)
//! profile_j(s) = sum_{h=1..3} amp_jh * sin(2 pi h s / period + phase_jh)
//! ```
//!
//! * `base_n ~ base_level * U(0.8, 1.2)`.
//! * `amp_jh = amplitude / h * U(0.5, 1)`, `phase_jh ~ U(0, 2 pi)`, `day_gain ~ 1 + 0.1 N(0, 1)`.
//! * Latent 0 has loadings `U(0.6, 1.4)` (a shared daily rhythm); further
//!   latents have loadings `U(-0.5, 0.5)`.
//! * Each frame starts an anomaly event with probability
//!   `anomaly_rate / anomaly_duration`, so about `anomaly_rate` of frames are
//!   covered by an event. An event lifts one random node by
//!   `anomaly_magnitude * U(0.5, 1)` for `anomaly_duration` frames.
//! * Nodes are placed uniformly in the unit square; distances are Euclidean.
//!
//! Without noise and anomalies the centred series has rank `k` exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::RawSeries;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub nodes: usize,
    pub frames: usize,
    /// Number of shared latent daily patterns.
    pub rank: usize,
    /// Frames per day.
    pub period: usize,
    pub noise: f64,
    pub anomaly_rate: f64,
    pub anomaly_magnitude: f64,
    pub anomaly_duration: usize,
    pub base_level: f64,
    pub amplitude: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            nodes: 20,
            frames: 3000,
            rank: 3,
            period: 288,
            noise: 2.0,
            anomaly_rate: 0.05,
            anomaly_magnitude: 200.0,
            anomaly_duration: 24,
            base_level: 200.0,
            amplitude: 80.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.nodes == 0 || self.frames < 2 || self.period < 2 {
            return fail("synth needs nodes >= 1, frames >= 2, period >= 2".into());
        }
        if self.rank == 0 || self.rank > self.nodes {
            return fail(format!(
                "rank {} must be between 1 and the node count {}",
                self.rank, self.nodes
            ));
        }
        if !(0.0..=1.0).contains(&self.anomaly_rate) || self.anomaly_duration == 0 {
            return fail("anomaly_rate must be in [0, 1] and anomaly_duration >= 1".into());
        }
        if [
            self.noise,
            self.anomaly_magnitude,
            self.base_level,
            self.amplitude,
        ]
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0)
        {
            return fail("noise, magnitudes and levels must be finite and >= 0".into());
        }
        Ok(())
    }
}

/// The generated series plus its components, for checking the recipe.
#[derive(Debug, Clone)]
pub struct SynthParts {
    pub series: RawSeries,
    /// `base + loadings * latents`, frame-major like `series`.
    pub latent: Vec<f64>,
    /// Largest |z| drawn for the noise term.
    pub max_abs_z: f64,
    /// `(start frame, node)` of every anomaly event.
    pub events: Vec<(usize, usize)>,
}

pub fn synthesize(spec: &SynthSpec, rng: &mut SeededRng) -> Result<RawSeries> {
    synthesize_parts(spec, rng).map(|p| p.series)
}

pub fn synthesize_parts(spec: &SynthSpec, rng: &mut SeededRng) -> Result<SynthParts> {
    spec.validate()?;
    let (n, frames, k, period) = (spec.nodes, spec.frames, spec.rank, spec.period);

    let coords: Vec<(f64, f64)> = (0..n).map(|_| (rng.uniform(), rng.uniform())).collect();
    let mut distances = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
            distances[(i, j)] = (dx * dx + dy * dy).sqrt();
        }
    }

    let bases: Vec<f64> = (0..n)
        .map(|_| spec.base_level * rng.uniform_range(0.8, 1.2))
        .collect();
    let loadings: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|j| {
                    if j == 0 {
                        rng.uniform_range(0.6, 1.4)
                    } else {
                        rng.uniform_range(-0.5, 0.5)
                    }
                })
                .collect()
        })
        .collect();
    let harmonics: Vec<[(f64, f64); 3]> = (0..k)
        .map(|_| {
            let mut h = [(0.0, 0.0); 3];
            for (i, slot) in h.iter_mut().enumerate() {
                let amp = spec.amplitude / (i + 1) as f64 * rng.uniform_range(0.5, 1.0);
                *slot = (amp, rng.uniform_range(0.0, 2.0 * PI));
            }
            h
        })
        .collect();
    let days = frames.div_ceil(period);
    let day_gain: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..days).map(|_| 1.0 + 0.1 * rng.normal()).collect())
        .collect();

    let latent_at = |j: usize, t: usize| -> f64 {
        let s = (t % period) as f64;
        let profile: f64 = harmonics[j]
            .iter()
            .enumerate()
            .map(|(h, &(amp, phase))| {
                amp * (2.0 * PI * (h + 1) as f64 * s / period as f64 + phase).sin()
            })
            .sum();
        day_gain[j][t / period] * profile
    };

    let mut latent = vec![0.0; frames * n];
    for t in 0..frames {
        let lat: Vec<f64> = (0..k).map(|j| latent_at(j, t)).collect();
        for node in 0..n {
            let mix: f64 = loadings[node].iter().zip(&lat).map(|(l, v)| l * v).sum();
            latent[t * n + node] = bases[node] + mix;
        }
    }

    let mut values = latent.clone();
    let mut max_abs_z = 0.0f64;
    for v in values.iter_mut() {
        let z = rng.normal();
        max_abs_z = max_abs_z.max(z.abs());
        *v += spec.noise * z;
    }

    let mut events = Vec::new();
    let start_prob = spec.anomaly_rate / spec.anomaly_duration as f64;
    for t in 0..frames {
        if spec.anomaly_rate > 0.0 && rng.bernoulli(start_prob) {
            let node = rng.below(n);
            let lift = spec.anomaly_magnitude * rng.uniform_range(0.5, 1.0);
            for tt in t..(t + spec.anomaly_duration).min(frames) {
                values[tt * n + node] += lift;
            }
            events.push((t, node));
        }
    }

    let series = RawSeries::new(n, frames, 1, values)?.with_distances(distances)?;
    Ok(SynthParts {
        series,
        latent,
        max_abs_z,
        events,
    })
}
