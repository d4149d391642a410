//! Model checkpoints.
//!
//! Little-endian layout:
//!
//! ```text
//! "MVTC" | version u16 | dtype u8 | step_count u64 | n_tensors u32
//! per tensor: name_len u16 | name | rank u8 | dims u32×rank | payload
//! ```
//!
//! `dtype` is 8 for f64 payloads (what the writer emits) or 4 for f32.
//! Tensor names are `param/<name>`, `adam_m/<name>` and `adam_v/<name>`.
//! Files are written to a temporary sibling and renamed into place.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{init_model, ModelState, MvitConfig};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MVTC";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 4;
const DTYPE_F64: u8 = 8;

fn put_tensor(buf: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) {
    buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
    buf.push(shape.len() as u8);
    for &d in shape {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(state: &ModelState) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(DTYPE_F64);
    buf.extend_from_slice(&state.step_count.to_le_bytes());
    buf.extend_from_slice(&((state.params.len() * 3) as u32).to_le_bytes());
    for (i, t) in state.params.iter().enumerate() {
        put_tensor(&mut buf, &format!("param/{}", t.name), &t.shape, &t.data);
        put_tensor(&mut buf, &format!("adam_m/{}", t.name), &t.shape, &state.adam_m[i]);
        put_tensor(&mut buf, &format!("adam_v/{}", t.name), &t.shape, &state.adam_v[i]);
    }
    buf
}

pub fn checkpoint_save(state: &ModelState, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, &encode(state))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(self.path, "truncated checkpoint"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decode and check against the tensor layout of `cfg`. With
/// `reinit_head = Some(seed)`, the decision head is redrawn as
/// `init_model(cfg, seed)` would draw it.
pub fn decode(bytes: &[u8], path: &str, cfg: &MvitConfig, reinit_head: Option<u64>) -> Result<ModelState> {
    let mut r = Reader { buf: bytes, pos: 0, path };
    if r.take(4)? != MAGIC {
        return Err(Error::format(path, "bad magic, not a checkpoint"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let dtype = r.u8()?;
    if dtype != DTYPE_F32 && dtype != DTYPE_F64 {
        return Err(Error::format(path, format!("unknown dtype code {dtype}")));
    }
    let step_count = r.u64()?;
    let n = r.u32()? as usize;
    let mut tensors: HashMap<String, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for _ in 0..n {
        let len = r.u16()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::format(path, "tensor name is not UTF-8"))?;
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let data = if dtype == DTYPE_F64 {
            r.take(count * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        } else {
            r.take(count * 4)?
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
                .collect()
        };
        tensors.insert(name, (shape, data));
    }
    if r.pos != bytes.len() {
        return Err(Error::format(path, "trailing bytes after last tensor"));
    }

    let mut state = init_model(cfg, 0)?;
    state.step_count = step_count;
    for (i, t) in state.params.iter_mut().enumerate() {
        for (prefix, slot) in [("param", &mut t.data), ("adam_m", &mut state.adam_m[i]), ("adam_v", &mut state.adam_v[i])] {
            let key = format!("{prefix}/{}", t.name);
            let (shape, data) = tensors
                .remove(&key)
                .ok_or_else(|| Error::format(path, format!("missing tensor `{key}`")))?;
            if shape != t.shape {
                return Err(Error::ShapeMismatch(format!(
                    "`{key}` has shape {shape:?}, model expects {:?}",
                    t.shape
                )));
            }
            *slot = data;
        }
    }
    if let Some(extra) = tensors.keys().next() {
        return Err(Error::ShapeMismatch(format!("unexpected tensor `{extra}` in checkpoint")));
    }
    if let Some(seed_value) = reinit_head {
        state.reinit_head(seed_value);
    }
    Ok(state)
}

pub fn checkpoint_load(path: &Path, cfg: &MvitConfig, reinit_head: Option<u64>) -> Result<ModelState> {
    let bytes = fs::read(path)?;
    decode(&bytes, &path.display().to_string(), cfg, reinit_head)
}
