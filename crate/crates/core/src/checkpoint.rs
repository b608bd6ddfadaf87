//! Binary checkpoint format. All integers and floats are little-endian.
//!
//! ```text
//! magic           4 bytes  "DPPO"
//! version         u32      = 1
//! layer_count     u32
//! per layer:      tensor_count u32 (weight, bias)
//!   per tensor:   ndim u32, dims u32 × ndim, values f64 × Π dims
//! adam step       u64
//! adam tensors    u32      (= total tensor count)
//!   per tensor:   len u64, m f64 × len, v f64 × len
//! updates         u64      (training step counter)
//! has_trainer     u8
//! trainer state (when has_trainer = 1):
//!   master_seed u64, episode_index u64, episode_seed u64, episode_steps u64,
//!   episode_return f64, episode_path f64, window u64,
//!   n u32, recent_returns f64 × n,
//!   n u32, env_snapshot f64 × n
//! ```
//!
//! Layers are the conv stages, the dense trunk, the policy head and the value
//! head, in that order. The architecture is recovered from the shapes.

use std::path::Path;

use crate::nn::{AdamState, ArchConfig, ConvSpec, NetworkWeights, Tensor};
use crate::ppo::TrainerState;
use crate::world::NUM_ACTIONS;

pub const MAGIC: &[u8; 4] = b"DPPO";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint malformed: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub weights: NetworkWeights,
    pub optimizer: AdamState,
    pub updates: u64,
    pub trainer: Option<TrainerState>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        let params = self.weights.params();
        put_u32(&mut out, (params.len() / 2) as u32);
        for pair in params.chunks(2) {
            put_u32(&mut out, pair.len() as u32);
            for t in pair {
                put_u32(&mut out, t.shape.len() as u32);
                for &d in &t.shape {
                    put_u32(&mut out, d as u32);
                }
                put_f64s(&mut out, &t.data);
            }
        }
        put_u64(&mut out, self.optimizer.step);
        put_u32(&mut out, self.optimizer.m.len() as u32);
        for (m, v) in self.optimizer.m.iter().zip(&self.optimizer.v) {
            put_u64(&mut out, m.len() as u64);
            put_f64s(&mut out, m);
            put_f64s(&mut out, v);
        }
        put_u64(&mut out, self.updates);
        match &self.trainer {
            None => out.push(0),
            Some(s) => {
                out.push(1);
                put_u64(&mut out, s.master_seed);
                put_u64(&mut out, s.episode_index);
                put_u64(&mut out, s.episode_seed);
                put_u64(&mut out, s.episode_steps);
                put_f64s(&mut out, &[s.episode_return, s.episode_path]);
                put_u64(&mut out, s.window);
                put_u32(&mut out, s.recent_returns.len() as u32);
                put_f64s(&mut out, &s.recent_returns);
                put_u32(&mut out, s.env_snapshot.len() as u32);
                put_f64s(&mut out, &s.env_snapshot);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let layer_count = r.u32()? as usize;
        let mut tensors = Vec::new();
        for _ in 0..layer_count {
            let n = r.u32()?;
            if n != 2 {
                return Err(CheckpointError::Malformed(format!(
                    "layer with {n} tensors"
                )));
            }
            for _ in 0..n {
                let ndim = r.u32()? as usize;
                if ndim > 8 {
                    return Err(CheckpointError::Malformed(format!("{ndim}-d tensor")));
                }
                let shape = (0..ndim)
                    .map(|_| r.u32().map(|d| d as usize))
                    .collect::<Result<Vec<_>, _>>()?;
                let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
                let len =
                    len.ok_or_else(|| CheckpointError::Malformed("tensor too large".into()))?;
                let data = r.f64s(len)?;
                tensors.push(Tensor { shape, data });
            }
        }
        let arch = infer_arch(&tensors)?;
        let mut weights =
            NetworkWeights::zeros(&arch).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        for (dst, src) in weights.params_mut().into_iter().zip(tensors) {
            if dst.shape != src.shape {
                return Err(CheckpointError::Malformed(format!(
                    "tensor shape {:?} where {:?} was expected",
                    src.shape, dst.shape
                )));
            }
            *dst = src;
        }

        let step = r.u64()?;
        let n = r.u32()? as usize;
        let mut m = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u64()? as usize;
            m.push(r.f64s(len)?);
            v.push(r.f64s(len)?);
        }
        let optimizer = AdamState { step, m, v };
        if !optimizer.matches(&weights) {
            return Err(CheckpointError::Malformed(
                "optimizer state does not match weights".into(),
            ));
        }
        let updates = r.u64()?;
        let trainer = match r.take(1)?[0] {
            0 => None,
            1 => {
                let master_seed = r.u64()?;
                let episode_index = r.u64()?;
                let episode_seed = r.u64()?;
                let episode_steps = r.u64()?;
                let episode_return = r.f64()?;
                let episode_path = r.f64()?;
                let window = r.u64()?;
                let n = r.u32()? as usize;
                let recent_returns = r.f64s(n)?;
                let n = r.u32()? as usize;
                let env_snapshot = r.f64s(n)?;
                Some(TrainerState {
                    master_seed,
                    episode_index,
                    episode_seed,
                    episode_steps,
                    episode_return,
                    episode_path,
                    window,
                    recent_returns,
                    env_snapshot,
                })
            }
            other => return Err(CheckpointError::Malformed(format!("trainer flag {other}"))),
        };
        if r.pos != bytes.len() {
            return Err(CheckpointError::Malformed(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            weights,
            optimizer,
            updates,
            trainer,
        })
    }

    /// Writes through a temporary file and renames, so an interrupted write
    /// never replaces a good checkpoint with a partial one.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

fn infer_arch(tensors: &[Tensor]) -> Result<ArchConfig, CheckpointError> {
    let bad = |m: &str| CheckpointError::Malformed(m.to_string());
    let weights: Vec<&Tensor> = tensors.iter().step_by(2).collect();
    let n_conv = weights.iter().take_while(|t| t.shape.len() == 4).count();
    if n_conv == 0 || weights.len() < n_conv + 3 {
        return Err(bad("too few layers"));
    }
    let conv: Vec<ConvSpec> = weights[..n_conv]
        .iter()
        .map(|t| ConvSpec {
            filters: t.shape[0],
            kernel: t.shape[2],
        })
        .collect();
    let heads = &weights[weights.len() - 2..];
    if heads[0].shape.first() != Some(&NUM_ACTIONS) || heads[1].shape.first() != Some(&1) {
        return Err(bad("missing policy or value head"));
    }
    let trunk = &weights[n_conv..weights.len() - 2];
    if trunk.iter().any(|t| t.shape.len() != 2) {
        return Err(bad("dense layer without a 2-d weight"));
    }
    let flatten = trunk[0].shape[1];
    let last = conv.last().map_or(1, |c| c.filters);
    let side = ((flatten / last) as f64).sqrt().round() as usize;
    if side * side * last != flatten {
        return Err(bad("flatten width does not match the conv stack"));
    }
    Ok(ArchConfig {
        input_size: side << n_conv,
        conv,
        dense: trunk.iter().map(|t| t.shape[0]).collect(),
    })
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    out.reserve(vs.len() * 8);
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}
