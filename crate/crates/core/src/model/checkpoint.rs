//! Versioned binary checkpoints.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic "STCK" | u32 version (=1)
//! u8 architecture (0 linear, 1 mlp_id)
//! u32 nodes | u32 input_len | u32 horizon | u32 features | u32 period | u32 hidden | u32 embed
//! features * f64 target mean | features * f64 target std
//! u64 P | P * f64 parameters | P * f64 momentum buffer
//! u64 step_count | u64 horizon | u64 schedule_t
//! f64 base_lr | f64 min_lr | f64 momentum | f64 weight_decay
//! u32 R | R * (u64 seed | u64 stream | u128 word_pos)
//! ```

use std::path::Path;

use super::{Architecture, ForecasterParams, ModelDims, OptimizerState};
use crate::dataset::{NormStats, WindowShape};
use crate::error::{Error, Result};
use crate::numerics::RngState;

const MAGIC: &[u8; 4] = b"STCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ForecasterParams,
    pub optimizer: OptimizerState,
    pub rng_states: Vec<RngState>,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let p = &self.params;
        let d = p.dims();
        let o = &self.optimizer;
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        b.push(p.arch().tag());
        for v in [
            d.shape.nodes,
            d.shape.input_len,
            d.shape.horizon,
            d.shape.features,
            d.period,
            d.hidden,
            d.embed,
        ] {
            b.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let stats = p.target_stats();
        for v in stats.mean.iter().chain(&stats.std) {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(p.len() as u64).to_le_bytes());
        for v in p.as_slice().iter().chain(&o.momentum_buf) {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [o.step_count, o.horizon as u64, o.schedule_t as u64] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [o.base_lr, o.min_lr, o.momentum, o.weight_decay] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(self.rng_states.len() as u32).to_le_bytes());
        for s in &self.rng_states {
            b.extend_from_slice(&s.seed.to_le_bytes());
            b.extend_from_slice(&s.stream.to_le_bytes());
            b.extend_from_slice(&s.word_pos.to_le_bytes());
        }
        b
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let arch = Architecture::from_tag(r.take(1)?[0])?;
        let mut dim = [0usize; 7];
        for d in dim.iter_mut() {
            *d = r.u32()? as usize;
        }
        let dims = ModelDims {
            shape: WindowShape {
                nodes: dim[0],
                input_len: dim[1],
                horizon: dim[2],
                features: dim[3],
            },
            period: dim[4],
            hidden: dim[5],
            embed: dim[6],
        };
        let stats = NormStats {
            mean: r.f64s(dims.shape.features)?,
            std: r.f64s(dims.shape.features)?,
        };
        let count = r.u64()? as usize;
        let params = ForecasterParams::from_parts(arch, dims, stats, r.f64s(count)?)?;
        let momentum_buf = r.f64s(count)?;
        let step_count = r.u64()?;
        let horizon = r.u64()? as usize;
        let schedule_t = r.u64()? as usize;
        let [base_lr, min_lr, momentum, weight_decay] = [r.f64()?, r.f64()?, r.f64()?, r.f64()?];
        let optimizer = OptimizerState {
            momentum_buf,
            step_count,
            base_lr,
            min_lr,
            momentum,
            weight_decay,
            horizon,
            schedule_t,
        };
        let n_rng = r.u32()? as usize;
        let mut rng_states = Vec::with_capacity(n_rng);
        for _ in 0..n_rng {
            let seed = r.u64()?;
            let stream = r.u64()?;
            let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
            rng_states.push(RngState {
                seed,
                stream,
                word_pos,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self {
            params,
            optimizer,
            rng_states,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}
