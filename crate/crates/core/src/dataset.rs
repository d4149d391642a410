//! Labeled tensor datasets and their binary container.
//!
//! ```text
//! "EEGF" | version u16 | little_endian u8 (=1) | n_samples u32 | dims u32×3 | label_width u8 (=1)
//! per sample: f32 × dims product | label u8 | meta_len u32 | meta bytes
//! ```
//!
//! Tensors are stored as f32 in memory too, so a dataset read back from disk
//! is identical to the one that was written.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::cwt::Scalogram;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::seed::rng;

pub const MAGIC: &[u8; 4] = b"EEGF";
pub const VERSION: u16 = 1;
const LABEL_WIDTH: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorDataset {
    dims: [usize; 3],
    data: Vec<f32>,
    labels: Vec<u8>,
    meta: Vec<Vec<u8>>,
}

impl TensorDataset {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::config(format!("tensor dims {dims:?} must be positive")));
        }
        Ok(Self {
            dims,
            data: Vec::new(),
            labels: Vec::new(),
            meta: Vec::new(),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn sample_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn meta(&self, i: usize) -> &[u8] {
        &self.meta[i]
    }

    pub fn tensor(&self, i: usize) -> &[f32] {
        let n = self.sample_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn push(&mut self, tensor: &[f64], label: u8, meta: &[u8]) -> Result<()> {
        if tensor.len() != self.sample_len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor of {} values, dataset expects {:?}",
                tensor.len(),
                self.dims
            )));
        }
        self.data.extend(tensor.iter().map(|&v| v as f32));
        self.labels.push(label);
        self.meta.push(meta.to_vec());
        Ok(())
    }

    pub fn push_scalogram(&mut self, s: &Scalogram, label: u8, meta: &[u8]) -> Result<()> {
        if s.shape() != self.dims {
            return Err(Error::ShapeMismatch(format!(
                "scalogram {:?}, dataset expects {:?}",
                s.shape(),
                self.dims
            )));
        }
        let flat: Vec<f64> = s.data.iter().copied().collect();
        self.push(&flat, label, meta)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for &l in &self.labels {
            if let Some(slot) = c.get_mut(usize::from(l)) {
                *slot += 1;
            }
        }
        c
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut out = Self {
            dims: self.dims,
            data: Vec::with_capacity(idx.len() * self.sample_len()),
            labels: Vec::with_capacity(idx.len()),
            meta: Vec::with_capacity(idx.len()),
        };
        for &i in idx {
            out.data.extend_from_slice(self.tensor(i));
            out.labels.push(self.labels[i]);
            out.meta.push(self.meta[i].clone());
        }
        out
    }

    /// Flattened f64 inputs and labels for the given sample indices.
    pub fn gather(&self, idx: &[usize]) -> (Vec<f64>, Vec<u8>) {
        let mut x = Vec::with_capacity(idx.len() * self.sample_len());
        for &i in idx {
            x.extend(self.tensor(i).iter().map(|&v| f64::from(v)));
        }
        (x, idx.iter().map(|&i| self.labels[i]).collect())
    }

    /// Split off a held-out part holding `fraction` of each class (rounded
    /// to nearest). Returns `(rest, held_out)`.
    pub fn stratified_split(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::config(format!("split fraction {fraction} outside [0, 1)")));
        }
        let mut r = rng(seed);
        let mut rest = Vec::new();
        let mut held = Vec::new();
        for class in 0..=1u8 {
            let mut members: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            members.shuffle(&mut r);
            let k = (members.len() as f64 * fraction).round() as usize;
            held.extend_from_slice(&members[..k]);
            rest.extend_from_slice(&members[k..]);
        }
        rest.sort_unstable();
        held.sort_unstable();
        Ok((self.subset(&rest), self.subset(&held)))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(32 + self.data.len() * 4 + self.len() * 5);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(1);
        buf.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for d in self.dims {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        buf.push(LABEL_WIDTH);
        for i in 0..self.len() {
            for v in self.tensor(i) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.push(self.labels[i]);
            buf.extend_from_slice(&(self.meta[i].len() as u32).to_le_bytes());
            buf.extend_from_slice(&self.meta[i]);
        }
        buf
    }

    pub fn decode(bytes: &[u8], path: &str) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            if pos + n > bytes.len() {
                return Err(Error::format(path, "truncated dataset container"));
            }
            let s = &bytes[pos..pos + n];
            pos += n;
            Ok(s)
        };
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
        if take(4)? != MAGIC {
            return Err(Error::format(path, "bad magic, not a dataset container"));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported version {version}")));
        }
        if take(1)?[0] != 1 {
            return Err(Error::format(path, "big-endian containers are not supported"));
        }
        let n = u32_at(take(4)?);
        let dims = [u32_at(take(4)?), u32_at(take(4)?), u32_at(take(4)?)];
        let width = take(1)?[0];
        if width != LABEL_WIDTH {
            return Err(Error::format(path, format!("unsupported label width {width}")));
        }
        let mut ds = Self::new(dims).map_err(|_| Error::format(path, format!("bad dims {dims:?}")))?;
        let per = ds.sample_len();
        for _ in 0..n {
            ds.data.extend(
                take(per * 4)?
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
            );
            ds.labels.push(take(1)?[0]);
            let m = u32_at(take(4)?);
            ds.meta.push(take(m)?.to_vec());
        }
        if pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes after last sample"));
        }
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        Self::decode(&bytes, &path.display().to_string())
    }
}
