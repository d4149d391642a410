//! The three EEG alterations and forging of balanced EEG / non-EEG
//! pre-training sets.
//!
//! Each alteration turns a real multi-channel record into a "non-EEG" one
//! while keeping its shape:
//!
//! * **white noise**: `n ~ U{1..N}` channels are replaced by Gaussian white
//!   noise with the replaced channel's standard deviation. Spectral shape
//!   becomes flat on those channels, amplitude stays the same.
//! * **shuffle**: the channel rows are permuted by a uniformly drawn
//!   non-identity permutation. Spatial correlation structure is broken,
//!   per-channel content is untouched.
//! * **mix**: two records swap the rows at one shared index set of size
//!   `n ~ U{1..N}`, leaving channels uncorrelated with their neighbours.
//!
//! Smaller `N` makes the white-noise and mixing tasks harder, since fewer
//! channels carry the tell-tale difference.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::EegRecord;

pub const LABEL_EEG: u8 = 0;
pub const LABEL_NON_EEG: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlterationKind {
    WhiteNoise,
    Shuffle,
    Mix,
}

impl AlterationKind {
    pub const ALL: [AlterationKind; 3] = [Self::WhiteNoise, Self::Shuffle, Self::Mix];

    /// Short name used on the command line and in file names.
    pub fn short_name(self) -> &'static str {
        match self {
            Self::WhiteNoise => "noise",
            Self::Shuffle => "shuffle",
            Self::Mix => "mix",
        }
    }
}

impl fmt::Display for AlterationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for AlterationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noise" | "whitenoise" | "white_noise" | "white-noise" => Ok(Self::WhiteNoise),
            "shuffle" | "shuffling" => Ok(Self::Shuffle),
            "mix" | "mixing" => Ok(Self::Mix),
            other => Err(Error::config(format!("unknown alteration `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlterationSpec {
    pub kind: AlterationKind,
    /// Upper bound `N` on the number of affected channels. Ignored by
    /// shuffling.
    pub max_channels: usize,
    pub seed: u64,
    /// Lift the `N <= n_channels / 2` bound for mixing.
    pub allow_mix_over_half: bool,
}

impl AlterationSpec {
    pub fn new(kind: AlterationKind, max_channels: usize, seed: u64) -> Self {
        Self {
            kind,
            max_channels,
            seed,
            allow_mix_over_half: false,
        }
    }
}

/// Provenance of one altered sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AlterationMeta {
    pub kind: AlterationKind,
    /// Replaced or swapped channel indices (sorted), or the permutation for
    /// shuffling: output row `i` is input row `affected[i]`.
    pub affected: Vec<usize>,
    pub n_affected: usize,
    pub source_id: String,
    pub partner_id: Option<String>,
}

impl AlterationMeta {
    /// Compact `key=value;...` form stored in dataset containers.
    pub fn encode(&self) -> String {
        let idx: Vec<String> = self.affected.iter().map(|i| i.to_string()).collect();
        let mut s = format!(
            "kind={};n={};indices={};source={}",
            self.kind,
            self.n_affected,
            idx.join(","),
            self.source_id
        );
        if let Some(p) = &self.partner_id {
            s.push_str(";partner=");
            s.push_str(p);
        }
        s
    }

    pub fn decode(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut n = None;
        let mut affected = Vec::new();
        let mut source_id = String::new();
        let mut partner_id = None;
        for part in s.split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::config(format!("bad meta field `{part}`")))?;
            match k {
                "kind" => kind = Some(v.parse()?),
                "n" => n = v.parse().ok(),
                "indices" if !v.is_empty() => {
                    affected = v
                        .split(',')
                        .map(|x| x.parse().map_err(|_| Error::config(format!("bad index `{x}`"))))
                        .collect::<Result<_>>()?
                }
                "source" => source_id = v.to_string(),
                "partner" => partner_id = Some(v.to_string()),
                _ => {}
            }
        }
        Ok(Self {
            kind: kind.ok_or_else(|| Error::config("meta lacks kind"))?,
            n_affected: n.ok_or_else(|| Error::config("meta lacks n"))?,
            affected,
            source_id,
            partner_id,
        })
    }
}

fn check_n(max_channels: usize, upper: usize, what: &str) -> Result<()> {
    if max_channels < 1 || max_channels > upper {
        return Err(Error::config(format!(
            "{what}: N must lie in 1..={upper}, got {max_channels}"
        )));
    }
    Ok(())
}

fn channel_sd(row: ndarray::ArrayView1<f64>) -> f64 {
    let n = row.len() as f64;
    let mean = row.sum() / n;
    (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Replace `n ~ U{1..N}` random channels by white Gaussian noise of matching
/// standard deviation.
pub fn white_noise_replace<R: Rng + ?Sized>(
    record: &EegRecord,
    max_channels: usize,
    rng: &mut R,
) -> Result<(EegRecord, AlterationMeta)> {
    let c = record.n_channels();
    check_n(max_channels, c, "white noise")?;
    let n = rng.random_range(1..=max_channels);
    let mut idx = index::sample(rng, c, n).into_vec();
    idx.sort_unstable();

    let mut data = record.data().clone();
    for &ch in &idx {
        let sd = channel_sd(record.data().row(ch));
        let mut row = data.row_mut(ch);
        if sd > 0.0 {
            let normal = Normal::new(0.0, sd).expect("finite positive sd");
            for v in row.iter_mut() {
                *v = normal.sample(rng);
            }
        } else {
            row.fill(0.0);
        }
    }
    let meta = AlterationMeta {
        kind: AlterationKind::WhiteNoise,
        n_affected: n,
        affected: idx,
        source_id: record.record_id().to_string(),
        partner_id: None,
    };
    let id = format!("{}+noise", record.record_id());
    Ok((record.with_data(data, id), meta))
}

/// Permute channel rows by a uniform draw from the non-identity
/// permutations.
pub fn shuffle_channels<R: Rng + ?Sized>(
    record: &EegRecord,
    rng: &mut R,
) -> Result<(EegRecord, AlterationMeta)> {
    let c = record.n_channels();
    if c < 2 {
        return Err(Error::config("shuffling needs at least 2 channels"));
    }
    let mut perm: Vec<usize> = (0..c).collect();
    // Rejection keeps the draw uniform over S_n minus the identity.
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().any(|(i, &p)| i != p) {
            break;
        }
    }
    let src = record.data();
    let data = Array2::from_shape_fn(src.dim(), |(i, t)| src[[perm[i], t]]);
    let meta = AlterationMeta {
        kind: AlterationKind::Shuffle,
        n_affected: perm.iter().enumerate().filter(|(i, &p)| *i != p).count(),
        affected: perm,
        source_id: record.record_id().to_string(),
        partner_id: None,
    };
    let id = format!("{}+shuffle", record.record_id());
    Ok((record.with_data(data, id), meta))
}

/// Swap the rows at one random index set of size `n ~ U{1..N}` between two
/// records.
pub fn mix_pair<R: Rng + ?Sized>(
    a: &EegRecord,
    b: &EegRecord,
    max_channels: usize,
    allow_over_half: bool,
    rng: &mut R,
) -> Result<(EegRecord, EegRecord, AlterationMeta, AlterationMeta)> {
    if a.data().dim() != b.data().dim() || a.sample_rate_hz() != b.sample_rate_hz() {
        return Err(Error::ShapeMismatch(format!(
            "cannot mix {:?} @ {} Hz with {:?} @ {} Hz",
            a.data().dim(),
            a.sample_rate_hz(),
            b.data().dim(),
            b.sample_rate_hz()
        )));
    }
    let c = a.n_channels();
    let upper = if allow_over_half { c } else { c / 2 };
    check_n(max_channels, upper, "mix")?;
    let n = rng.random_range(1..=max_channels);
    let mut idx = index::sample(rng, c, n).into_vec();
    idx.sort_unstable();

    let mut da = a.data().clone();
    let mut db = b.data().clone();
    for &ch in &idx {
        da.row_mut(ch).assign(&b.data().row(ch));
        db.row_mut(ch).assign(&a.data().row(ch));
    }
    let meta = |src: &EegRecord, partner: &EegRecord| AlterationMeta {
        kind: AlterationKind::Mix,
        n_affected: n,
        affected: idx.clone(),
        source_id: src.record_id().to_string(),
        partner_id: Some(partner.record_id().to_string()),
    };
    let (ma, mb) = (meta(a, b), meta(b, a));
    let ra = a.with_data(da, format!("{}+mix", a.record_id()));
    let rb = b.with_data(db, format!("{}+mix", b.record_id()));
    Ok((ra, rb, ma, mb))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgedSample {
    pub record: EegRecord,
    pub label: u8,
    pub meta: Option<AlterationMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgeOutput {
    pub kind: AlterationKind,
    pub samples: Vec<ForgedSample>,
    /// Records left out (odd leftover of the mixing half).
    pub dropped: usize,
}

impl ForgeOutput {
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for s in &self.samples {
            c[s.label as usize] += 1;
        }
        c
    }
}

/// Split `records` 50/50, keep one half as real EEG (label 0), alter the
/// other half (label 1), and shuffle the result. Per-sample random streams
/// are `derive(seed, sample_index)`, so the output does not depend on
/// thread scheduling.
pub fn forge_pretraining_set(records: &[EegRecord], spec: &AlterationSpec) -> Result<ForgeOutput> {
    if records.len() < 2 {
        return Err(Error::config(format!(
            "forging needs at least 2 records, got {}",
            records.len()
        )));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut seed::rng_for(spec.seed, 0));
    let n_control = records.len() / 2;
    let (control, altered) = order.split_at(n_control);

    let stream = |i: usize| seed::rng_for(spec.seed, 1 + i as u64);
    let mut altered_samples: Vec<ForgedSample> = match spec.kind {
        AlterationKind::WhiteNoise => altered
            .par_iter()
            .enumerate()
            .map(|(i, &r)| {
                let (rec, meta) = white_noise_replace(&records[r], spec.max_channels, &mut stream(i))?;
                Ok(ForgedSample {
                    record: rec,
                    label: LABEL_NON_EEG,
                    meta: Some(meta),
                })
            })
            .collect::<Result<_>>()?,
        AlterationKind::Shuffle => altered
            .par_iter()
            .enumerate()
            .map(|(i, &r)| {
                let (rec, meta) = shuffle_channels(&records[r], &mut stream(i))?;
                Ok(ForgedSample {
                    record: rec,
                    label: LABEL_NON_EEG,
                    meta: Some(meta),
                })
            })
            .collect::<Result<_>>()?,
        AlterationKind::Mix => altered
            .par_chunks_exact(2)
            .enumerate()
            .map(|(i, pair)| {
                let (ra, rb, ma, mb) = mix_pair(
                    &records[pair[0]],
                    &records[pair[1]],
                    spec.max_channels,
                    spec.allow_mix_over_half,
                    &mut stream(i),
                )?;
                Ok([
                    ForgedSample {
                        record: ra,
                        label: LABEL_NON_EEG,
                        meta: Some(ma),
                    },
                    ForgedSample {
                        record: rb,
                        label: LABEL_NON_EEG,
                        meta: Some(mb),
                    },
                ])
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect(),
    };
    let dropped = altered.len() - altered_samples.len();

    let mut samples: Vec<ForgedSample> = control
        .iter()
        .map(|&r| ForgedSample {
            record: records[r].clone(),
            label: LABEL_EEG,
            meta: None,
        })
        .collect();
    samples.append(&mut altered_samples);
    samples.shuffle(&mut seed::rng_for(spec.seed, u64::MAX));

    Ok(ForgeOutput {
        kind: spec.kind,
        samples,
        dropped,
    })
}
