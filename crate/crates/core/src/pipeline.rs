//! End-to-end dataset preparation: windows, label exclusion, forging, and
//! scalogram tensors.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::alterations::{forge_pretraining_set, AlterationKind, AlterationSpec, ForgeOutput};
use crate::config::KvConfig;
use crate::cwt::{scalogram_with_plan, CwtConfig, CwtPlan};
use crate::dataset::TensorDataset;
use crate::error::{Error, Result};
use crate::io::parse_csv_record;
use crate::seed::derive_path;
use crate::signal::{
    label_seizure_windows, segment_windows, EegRecord, LabeledWindowSet, SeizureAnnotation, SeizureLabelConfig,
    WindowSpec,
};
use crate::synthgen::{generate_eeg, ClassEffect, SynthConfig};

/// Synthetic two-class task: class-1 records carry a posterior 10 Hz
/// component. Each record is exactly one window long.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub n_records: usize,
    pub n_channels: usize,
    pub sample_rate_hz: f64,
    pub window_s: f64,
    pub spectral_exponent: f64,
    pub correlation_scale: f64,
    pub amplitude_uv: f64,
    /// Relative to `amplitude_uv`; 0 disables the class effect.
    pub alpha_amplitude: f64,
    pub cwt: CwtConfig,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            n_records: 400,
            n_channels: 32,
            sample_rate_hz: 128.0,
            window_s: 4.0,
            spectral_exponent: 1.0,
            correlation_scale: 1.5,
            amplitude_uv: 20.0,
            alpha_amplitude: 0.5,
            cwt: CwtConfig {
                min_freq_hz: 4.0,
                max_freq_hz: 40.0,
                ..CwtConfig::default()
            },
        }
    }
}

impl SyntheticTask {
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            n_records: kv.get_or("n_records", d.n_records)?,
            n_channels: kv.get_or("n_channels", d.n_channels)?,
            sample_rate_hz: kv.get_or("sample_rate_hz", d.sample_rate_hz)?,
            window_s: kv.get_or("window_s", d.window_s)?,
            spectral_exponent: kv.get_or("spectral_exponent", d.spectral_exponent)?,
            correlation_scale: kv.get_or("correlation_scale", d.correlation_scale)?,
            amplitude_uv: kv.get_or("amplitude_uv", d.amplitude_uv)?,
            alpha_amplitude: kv.get_or("alpha_amplitude", d.alpha_amplitude)?,
            cwt: cwt_from_kv(kv, d.cwt)?,
        })
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        kv.set("n_records", self.n_records);
        kv.set("n_channels", self.n_channels);
        kv.set("sample_rate_hz", self.sample_rate_hz);
        kv.set("window_s", self.window_s);
        kv.set("spectral_exponent", self.spectral_exponent);
        kv.set("correlation_scale", self.correlation_scale);
        kv.set("amplitude_uv", self.amplitude_uv);
        kv.set("alpha_amplitude", self.alpha_amplitude);
        cwt_to_kv(&self.cwt, &mut kv);
        kv
    }

    /// Records with alternating classes; record `i` uses seed
    /// `derive(seed, i)`.
    pub fn generate(&self, seed: u64) -> Result<LabeledWindowSet> {
        if self.n_records < 2 {
            return Err(Error::config("need at least 2 synthetic records"));
        }
        let records: Vec<EegRecord> = (0..self.n_records)
            .into_par_iter()
            .map(|i| {
                let class1 = i % 2 == 1;
                let cfg = SynthConfig {
                    n_channels: self.n_channels,
                    duration_s: self.window_s,
                    sample_rate_hz: self.sample_rate_hz,
                    spectral_exponent: self.spectral_exponent,
                    correlation_scale: self.correlation_scale,
                    amplitude_uv: self.amplitude_uv,
                    class_effect: (class1 && self.alpha_amplitude > 0.0).then(|| ClassEffect::alpha(self.alpha_amplitude)),
                    layout: None,
                    seed: derive_path(seed, &[i as u64]),
                };
                generate_eeg(&cfg)
            })
            .collect::<Result<_>>()?;
        let labels = (0..self.n_records).map(|i| (i % 2) as u8).collect();
        LabeledWindowSet::fully_labeled(records, labels)
    }
}

pub fn cwt_from_kv(kv: &KvConfig, d: CwtConfig) -> Result<CwtConfig> {
    Ok(CwtConfig {
        n_scales: kv.get_or("cwt.n_scales", d.n_scales)?,
        min_freq_hz: kv.get_or("cwt.min_freq_hz", d.min_freq_hz)?,
        max_freq_hz: kv.get_or("cwt.max_freq_hz", d.max_freq_hz)?,
        omega0: kv.get_or("cwt.omega0", d.omega0)?,
        time_columns: kv.get_or("cwt.time_columns", d.time_columns)?,
    })
}

pub fn cwt_to_kv(c: &CwtConfig, kv: &mut KvConfig) {
    kv.set("cwt.n_scales", c.n_scales);
    kv.set("cwt.min_freq_hz", c.min_freq_hz);
    kv.set("cwt.max_freq_hz", c.max_freq_hz);
    kv.set("cwt.omega0", c.omega0);
    kv.set("cwt.time_columns", c.time_columns);
}

/// Seizure sidecar: one `onset_s,offset_s` pair per line, `#` comments.
pub fn parse_seizures(text: &str, path: &str) -> Result<SeizureAnnotation> {
    let mut on = Vec::new();
    let mut off = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::format(path, format!("line {}: expected `onset_s,offset_s`", i + 1));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        on.push(a.trim().parse().map_err(|_| bad())?);
        off.push(b.trim().parse().map_err(|_| bad())?);
    }
    SeizureAnnotation::new(on, off)
}

/// Windows from every `*.csv` in `dir`, in file-name order. A record with a
/// `<stem>.seizures` sidecar gets pre-ictal / inter-ictal labels; windows of
/// records without one are unlabeled.
pub fn windows_from_csv_dir(
    dir: &Path,
    spec: &WindowSpec,
    label_cfg: &SeizureLabelConfig,
) -> Result<(LabeledWindowSet, Vec<EegRecord>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::format(dir.display().to_string(), e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::format(dir.display().to_string(), "no .csv records found"));
    }
    let mut labeled: Vec<(EegRecord, u8, bool)> = Vec::new();
    let mut unlabeled = Vec::new();
    for path in files {
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(&path)?;
        let record = parse_csv_record(&text, &stem)?;
        let windows = segment_windows(&record, spec)?;
        let sidecar = path.with_extension("seizures");
        if sidecar.exists() {
            let p = sidecar.display().to_string();
            let ann = parse_seizures(&fs::read_to_string(&sidecar)?, &p)?;
            let set = label_seizure_windows(windows, &ann, label_cfg)?;
            for ((w, l), m) in set.windows.into_iter().zip(set.labels).zip(set.mask) {
                labeled.push((w, l, m));
            }
        } else {
            unlabeled.extend(windows);
        }
    }
    let (w, rest): (Vec<_>, Vec<_>) = labeled.into_iter().map(|(w, l, m)| (w, (l, m))).unzip();
    let (l, m) = rest.into_iter().unzip();
    Ok((LabeledWindowSet::new(w, l, m)?, unlabeled))
}

/// Scalogram tensors of `records` with the given labels and meta blobs.
pub fn tensorize(records: &[EegRecord], labels: &[u8], metas: &[String], cwt: &CwtConfig) -> Result<TensorDataset> {
    let first = records
        .first()
        .ok_or_else(|| Error::Degenerate("no records to transform".into()))?;
    let plan = CwtPlan::new(cwt, first.sample_rate_hz(), first.n_samples())?;
    let grams = records
        .par_iter()
        .map(|r| {
            if r.sample_rate_hz() != first.sample_rate_hz() || r.n_samples() != first.n_samples() {
                return Err(Error::ShapeMismatch(format!(
                    "record `{}` differs in rate or length from `{}`",
                    r.record_id(),
                    first.record_id()
                )));
            }
            scalogram_with_plan(r, &plan)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ds = TensorDataset::new(grams[0].shape())?;
    for ((g, &l), m) in grams.iter().zip(labels).zip(metas) {
        ds.push_scalogram(g, l, m.as_bytes())?;
    }
    Ok(ds)
}

pub fn forged_to_dataset(out: &ForgeOutput, cwt: &CwtConfig) -> Result<TensorDataset> {
    let records: Vec<EegRecord> = out.samples.iter().map(|s| s.record.clone()).collect();
    let labels: Vec<u8> = out.samples.iter().map(|s| s.label).collect();
    let metas: Vec<String> = out
        .samples
        .iter()
        .map(|s| match &s.meta {
            Some(m) => m.encode(),
            None => format!("kind=none;source={}", s.record.record_id()),
        })
        .collect();
    tensorize(&records, &labels, &metas, cwt)
}

/// Forge one pre-training dataset per alteration from the same unlabeled
/// pool. Alteration `k` uses seed `derive(seed, k)`.
pub fn forge_all(
    pool: &[EegRecord],
    kinds: &[AlterationKind],
    max_channels: usize,
    seed: u64,
    cwt: &CwtConfig,
) -> Result<Vec<(AlterationKind, TensorDataset)>> {
    kinds
        .iter()
        .map(|&kind| {
            let k = AlterationKind::ALL.iter().position(|&x| x == kind).unwrap() as u64;
            let spec = AlterationSpec::new(kind, max_channels, derive_path(seed, &[k]));
            let out = forge_pretraining_set(pool, &spec)?;
            Ok((kind, forged_to_dataset(&out, cwt)?))
        })
        .collect()
}

/// Labeled windows as a task dataset.
pub fn task_dataset(set: &LabeledWindowSet, cwt: &CwtConfig) -> Result<TensorDataset> {
    let (records, labels): (Vec<EegRecord>, Vec<u8>) = set.labeled().map(|(r, l)| (r.clone(), l)).unzip();
    let metas: Vec<String> = records
        .iter()
        .zip(&labels)
        .map(|(r, l)| format!("record={};label={l}", r.record_id()))
        .collect();
    tensorize(&records, &labels, &metas, cwt)
}
