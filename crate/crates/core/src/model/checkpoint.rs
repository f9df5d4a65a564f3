//! Versioned binary checkpoint.
//!
//! ```text
//! magic "SGCKPT\0\0" | version u32 | config length u32 | config JSON
//! | tensor count u32 | per tensor: rows u32 | cols u32 | [f32; rows * cols]
//! ```
//!
//! Integers and reals are little-endian; tensors follow [`ParamSet::tensors`].

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{ModelConfig, ModelError, ParamSet};

const MAGIC: &[u8; 8] = b"SGCKPT\0\0";
const VERSION: u32 = 1;

pub fn encode(cfg: &ModelConfig, params: &ParamSet<f32>) -> Vec<u8> {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    let tensors = params.tensors();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.nrows() as u32).to_le_bytes());
        out.extend_from_slice(&(t.ncols() as u32).to_le_bytes());
        for &v in t.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn decode(buf: &[u8]) -> Result<(ModelConfig, ParamSet<f32>), ModelError> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], ModelError> {
        let end = pos.checked_add(n).filter(|&e| e <= buf.len()).ok_or_else(|| bad("truncated"))?;
        let s = &buf[pos..end];
        pos = end;
        Ok(s)
    };
    if take(8)? != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let word = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let version = word(take(4)?);
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let json_len = word(take(4)?) as usize;
    let cfg: ModelConfig = serde_json::from_slice(take(json_len)?).map_err(|e| bad(format!("config: {e}")))?;
    cfg.validate()?;
    let mut params = ParamSet::<f32>::zeros(&cfg);
    let count = word(take(4)?) as usize;
    let mut slots = params.tensors_mut();
    if count != slots.len() {
        return Err(bad(format!("{count} tensors stored, config needs {}", slots.len())));
    }
    for (i, slot) in slots.iter_mut().enumerate() {
        let rows = word(take(4)?) as usize;
        let cols = word(take(4)?) as usize;
        if (rows, cols) != slot.dim() {
            return Err(bad(format!("tensor {i} is {rows}x{cols}, expected {:?}", slot.dim())));
        }
        let data: Vec<f32> = take(rows * cols * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        **slot = Array2::from_shape_vec((rows, cols), data).expect("sized above");
    }
    drop(slots);
    if pos != buf.len() {
        return Err(bad("trailing bytes"));
    }
    if !params.is_finite() {
        return Err(bad("non-finite parameter values"));
    }
    Ok((cfg, params))
}

pub fn save_checkpoint(path: &Path, cfg: &ModelConfig, params: &ParamSet<f32>) -> Result<(), ModelError> {
    fs::write(path, encode(cfg, params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, ParamSet<f32>), ModelError> {
    decode(&fs::read(path)?)
}
