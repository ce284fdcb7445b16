//! Forecaster family with hand-written gradients.
//!
//! Both architectures map each node independently, sharing weights across
//! nodes. With `u` the node's flattened normalized input window (`T_p * F`):
//!
//! * `linear`: `z = W u + b`
//! * `mlp_id`: `z = W3 relu(W2 relu(W1 [u; node_emb[n]; tod_emb[s]] + b1) + b2) + b3`,
//!   where `s` is the time-of-day slot of the last observed frame.
//!
//! `z` (`T_f * F`) is in normalized units and is mapped back to target units
//! with the training statistics before any error is taken.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ErrorMatrix;
use crate::dataset::{NormStats, WindowShape, WindowedSample};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Linear,
    MlpId,
}

impl Architecture {
    pub fn tag(self) -> u8 {
        match self {
            Architecture::Linear => 0,
            Architecture::MlpId => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Architecture::Linear),
            1 => Ok(Architecture::MlpId),
            t => Err(Error::Format(format!("unknown architecture tag {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub shape: WindowShape,
    /// Time-of-day slots (frames per day).
    pub period: usize,
    pub hidden: usize,
    pub embed: usize,
}

impl ModelDims {
    fn input(&self) -> usize {
        self.shape.input_len * self.shape.features
    }

    fn output(&self) -> usize {
        self.shape.horizon * self.shape.features
    }

    fn mlp_input(&self) -> usize {
        self.input() + 2 * self.embed
    }
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    node_emb: usize,
    tod_emb: usize,
    len: usize,
}

impl Layout {
    fn new(arch: Architecture, d: &ModelDims) -> Self {
        match arch {
            // w1/b1 hold the single linear layer
            Architecture::Linear => {
                let w = d.output() * d.input();
                Layout {
                    w1: 0,
                    b1: w,
                    w2: 0,
                    b2: 0,
                    w3: 0,
                    b3: 0,
                    node_emb: 0,
                    tod_emb: 0,
                    len: w + d.output(),
                }
            }
            Architecture::MlpId => {
                let (h, a0, out) = (d.hidden, d.mlp_input(), d.output());
                let w1 = 0;
                let b1 = w1 + h * a0;
                let w2 = b1 + h;
                let b2 = w2 + h * h;
                let w3 = b2 + h;
                let b3 = w3 + out * h;
                let node_emb = b3 + out;
                let tod_emb = node_emb + d.shape.nodes * d.embed;
                Layout {
                    w1,
                    b1,
                    w2,
                    b2,
                    w3,
                    b3,
                    node_emb,
                    tod_emb,
                    len: tod_emb + d.period * d.embed,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterParams {
    arch: Architecture,
    dims: ModelDims,
    /// Statistics used to map normalized outputs back to target units.
    target_stats: NormStats,
    data: Vec<f64>,
}

/// Output of one weighted forward/backward pass.
#[derive(Debug, Clone)]
pub struct BatchResult {
    /// `sum_i w_i MAE_i / sum_i w_i`.
    pub loss: f64,
    pub grads: Vec<f64>,
    pub errors: Vec<ErrorMatrix>,
    pub weight_sum: f64,
}

const CHUNK: usize = 8;

impl ForecasterParams {
    pub fn zeros(arch: Architecture, dims: ModelDims, target_stats: NormStats) -> Result<Self> {
        if target_stats.mean.len() != dims.shape.features {
            return Err(Error::ShapeMismatch(format!(
                "{} normalization channels for {} features",
                target_stats.mean.len(),
                dims.shape.features
            )));
        }
        if arch == Architecture::MlpId && (dims.hidden == 0 || dims.period == 0) {
            return Err(Error::InvalidArgument(
                "mlp_id needs hidden > 0 and period > 0".into(),
            ));
        }
        let len = Layout::new(arch, &dims).len;
        Ok(Self {
            arch,
            dims,
            target_stats,
            data: vec![0.0; len],
        })
    }

    /// Random initialization: fan-in scaled Gaussian weights, zero biases,
    /// small Gaussian embeddings.
    pub fn init(
        arch: Architecture,
        dims: ModelDims,
        target_stats: NormStats,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let mut p = Self::zeros(arch, dims, target_stats)?;
        let l = p.layout();
        let d = p.dims;
        let mut fill = |data: &mut [f64], scale: f64| {
            for v in data {
                *v = scale * rng.normal();
            }
        };
        match arch {
            Architecture::Linear => {
                fill(&mut p.data[l.w1..l.b1], (1.0 / d.input() as f64).sqrt());
            }
            Architecture::MlpId => {
                fill(&mut p.data[l.w1..l.b1], (2.0 / d.mlp_input() as f64).sqrt());
                fill(&mut p.data[l.w2..l.b2], (2.0 / d.hidden as f64).sqrt());
                fill(&mut p.data[l.w3..l.b3], (1.0 / d.hidden as f64).sqrt());
                fill(&mut p.data[l.node_emb..l.len], 0.1);
            }
        }
        Ok(p)
    }

    pub fn from_parts(
        arch: Architecture,
        dims: ModelDims,
        target_stats: NormStats,
        data: Vec<f64>,
    ) -> Result<Self> {
        let mut p = Self::zeros(arch, dims, target_stats)?;
        if data.len() != p.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters, expected {}",
                data.len(),
                p.data.len()
            )));
        }
        p.data = data;
        Ok(p)
    }

    fn layout(&self) -> Layout {
        Layout::new(self.arch, &self.dims)
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn target_stats(&self) -> &NormStats {
        &self.target_stats
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear weight matrix `[T_f*F x T_p*F]` followed by its bias, for
    /// building hand-crafted linear models.
    pub fn linear_block_mut(&mut self) -> Result<(&mut [f64], &mut [f64])> {
        if self.arch != Architecture::Linear {
            return Err(Error::InvalidArgument("not a linear model".into()));
        }
        let l = self.layout();
        Ok(self.data.split_at_mut(l.b1))
    }

    fn check_sample(&self, s: &WindowedSample) -> Result<()> {
        let shape = &self.dims.shape;
        if s.x.len() != shape.input_size() || s.y.len() != shape.target_size() {
            return Err(Error::ShapeMismatch(format!(
                "sample {} has {}/{} values, model expects {}/{}",
                s.index,
                s.x.len(),
                s.y.len(),
                shape.input_size(),
                shape.target_size()
            )));
        }
        Ok(())
    }

    /// Prediction `[N, T_f, F]` in target units.
    pub fn forward(&self, sample: &WindowedSample) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        let mut scratch = Scratch::new(&self.dims);
        let mut out = Vec::with_capacity(self.dims.shape.target_size());
        for n in 0..self.dims.shape.nodes {
            self.forward_node(sample, n, &mut scratch);
            out.extend(self.denormalized(&scratch.z));
        }
        Ok(out)
    }

    pub fn predict(&self, samples: &[WindowedSample]) -> Result<Vec<Vec<f64>>> {
        samples.par_iter().map(|s| self.forward(s)).collect()
    }

    fn denormalized<'a>(&'a self, z: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let f = self.dims.shape.features;
        z.iter()
            .enumerate()
            .map(move |(k, v)| v * self.target_stats.std[k % f] + self.target_stats.mean[k % f])
    }

    fn tod_slot(&self, sample: &WindowedSample) -> usize {
        sample.last_input_frame(&self.dims.shape) % self.dims.period.max(1)
    }

    fn forward_node(&self, sample: &WindowedSample, node: usize, s: &mut Scratch) {
        let d = &self.dims;
        let l = self.layout();
        let w = &self.data;
        let nin = d.input();
        let u = &sample.x[node * nin..(node + 1) * nin];
        match self.arch {
            Architecture::Linear => {
                affine(&w[l.w1..l.b1], &w[l.b1..l.len], u, &mut s.z);
            }
            Architecture::MlpId => {
                let e = d.embed;
                let slot = self.tod_slot(sample);
                s.a0[..nin].copy_from_slice(u);
                s.a0[nin..nin + e]
                    .copy_from_slice(&w[l.node_emb + node * e..l.node_emb + (node + 1) * e]);
                s.a0[nin + e..]
                    .copy_from_slice(&w[l.tod_emb + slot * e..l.tod_emb + (slot + 1) * e]);
                affine(&w[l.w1..l.b1], &w[l.b1..l.w2], &s.a0, &mut s.h1);
                s.h1.iter_mut().for_each(|v| *v = v.max(0.0));
                affine(&w[l.w2..l.b2], &w[l.b2..l.w3], &s.h1, &mut s.h2);
                s.h2.iter_mut().for_each(|v| *v = v.max(0.0));
                affine(&w[l.w3..l.b3], &w[l.b3..l.node_emb], &s.h2, &mut s.z);
            }
        }
    }

    /// Accumulates `coef * d(MAE)/d(params)` for one sample into `grads`
    /// and returns `(MAE, error matrix)`.
    fn backward_sample(
        &self,
        sample: &WindowedSample,
        coef: f64,
        grads: &mut [f64],
        s: &mut Scratch,
    ) -> (f64, ErrorMatrix) {
        let d = &self.dims;
        let l = self.layout();
        let (nodes, horizon, f) = (d.shape.nodes, d.shape.horizon, d.shape.features);
        let nout = d.output();
        let nin = d.input();
        let k_total = (nodes * nout) as f64;
        let mut err = vec![0.0; nodes * horizon];
        let mut abs_sum = 0.0;
        let w = &self.data;

        for n in 0..nodes {
            self.forward_node(sample, n, s);
            for k in 0..nout {
                let feat = k % f;
                let std = self.target_stats.std[feat];
                let pred = s.z[k] * std + self.target_stats.mean[feat];
                let resid = pred - sample.y[n * nout + k];
                abs_sum += resid.abs();
                err[n * horizon + k / f] += resid.abs() / f as f64;
                let sign = if resid > 0.0 {
                    1.0
                } else if resid < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                s.dz[k] = coef * sign * std / k_total;
            }
            match self.arch {
                Architecture::Linear => {
                    let u = &sample.x[n * nin..(n + 1) * nin];
                    outer_acc(&mut grads[l.w1..l.b1], &s.dz, u);
                    add(&mut grads[l.b1..l.len], &s.dz);
                }
                Architecture::MlpId => {
                    let e = d.embed;
                    let h = d.hidden;
                    outer_acc(&mut grads[l.w3..l.b3], &s.dz, &s.h2);
                    add(&mut grads[l.b3..l.node_emb], &s.dz);
                    transpose_mul(&w[l.w3..l.b3], nout, h, &s.dz, &mut s.dh2);
                    for (g, &a) in s.dh2.iter_mut().zip(&s.h2) {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    outer_acc(&mut grads[l.w2..l.b2], &s.dh2, &s.h1);
                    add(&mut grads[l.b2..l.w3], &s.dh2);
                    transpose_mul(&w[l.w2..l.b2], h, h, &s.dh2, &mut s.dh1);
                    for (g, &a) in s.dh1.iter_mut().zip(&s.h1) {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    outer_acc(&mut grads[l.w1..l.b1], &s.dh1, &s.a0);
                    add(&mut grads[l.b1..l.w2], &s.dh1);
                    transpose_mul(&w[l.w1..l.b1], h, d.mlp_input(), &s.dh1, &mut s.da0);
                    let slot = self.tod_slot(sample);
                    add(
                        &mut grads[l.node_emb + n * e..l.node_emb + (n + 1) * e],
                        &s.da0[nin..nin + e],
                    );
                    add(
                        &mut grads[l.tod_emb + slot * e..l.tod_emb + (slot + 1) * e],
                        &s.da0[nin + e..],
                    );
                }
            }
        }
        let em = ErrorMatrix::new(sample.index, nodes, horizon, err)
            .expect("error matrix shape is consistent");
        (abs_sum / k_total, em)
    }

    /// Weighted MAE over a batch and its exact gradient. The loss is
    /// normalized by the weight sum.
    pub fn weighted_loss_and_grads(&self, batch: &[(&WindowedSample, f64)]) -> Result<BatchResult> {
        if batch.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (s, w) in batch {
            self.check_sample(s)?;
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "sample {} has non-positive weight {w}",
                    s.index
                )));
            }
        }
        let weight_sum: f64 = batch.iter().map(|(_, w)| w).sum();
        // Fixed chunking keeps the reduction order independent of thread count.
        let partials: Vec<(Vec<f64>, f64, Vec<ErrorMatrix>)> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut grads = vec![0.0; self.data.len()];
                let mut scratch = Scratch::new(&self.dims);
                let mut loss = 0.0;
                let mut errors = Vec::with_capacity(chunk.len());
                for (s, w) in chunk {
                    let coef = w / weight_sum;
                    let (mae, em) = self.backward_sample(s, coef, &mut grads, &mut scratch);
                    loss += coef * mae;
                    errors.push(em);
                }
                (grads, loss, errors)
            })
            .collect();

        let mut grads = vec![0.0; self.data.len()];
        let mut loss = 0.0;
        let mut errors = Vec::with_capacity(batch.len());
        for (g, l, e) in partials {
            add(&mut grads, &g);
            loss += l;
            errors.extend(e);
        }
        Ok(BatchResult {
            loss,
            grads,
            errors,
            weight_sum,
        })
    }
}

struct Scratch {
    a0: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    z: Vec<f64>,
    dz: Vec<f64>,
    dh2: Vec<f64>,
    dh1: Vec<f64>,
    da0: Vec<f64>,
}

impl Scratch {
    fn new(d: &ModelDims) -> Self {
        Self {
            a0: vec![0.0; d.mlp_input()],
            h1: vec![0.0; d.hidden],
            h2: vec![0.0; d.hidden],
            z: vec![0.0; d.output()],
            dz: vec![0.0; d.output()],
            dh2: vec![0.0; d.hidden],
            dh1: vec![0.0; d.hidden],
            da0: vec![0.0; d.mlp_input()],
        }
    }
}

/// `out = W x + b` with `W` row-major `[out.len() x x.len()]`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o = b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out = W^T g` for `W` of shape `[rows x cols]`.
fn transpose_mul(w: &[f64], rows: usize, cols: usize, g: &[f64], out: &mut [f64]) {
    out[..cols].iter_mut().for_each(|v| *v = 0.0);
    for r in 0..rows {
        let gr = g[r];
        if gr == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += gr * wv;
        }
    }
}

/// `G += g x^T`.
fn outer_acc(grad: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == 0.0 {
            continue;
        }
        for (o, &xv) in grad[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *o += gr * xv;
        }
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
