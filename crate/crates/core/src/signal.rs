//! EEG data model: records, channel layouts, windowing, seizure-derived
//! labels and the labeled/unlabeled split.

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::{s, Array2};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Electrode names and 2-D head-surface coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLayout {
    names: Vec<String>,
    positions: Vec<[f64; 2]>,
}

impl ChannelLayout {
    pub fn new(names: Vec<String>, positions: Vec<[f64; 2]>) -> Result<Self> {
        if names.len() != positions.len() {
            return Err(Error::InvalidRecord(format!(
                "layout has {} names but {} positions",
                names.len(),
                positions.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidRecord(format!("duplicate channel name `{n}`")));
            }
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord("non-finite channel position".into()));
        }
        Ok(Self { names, positions })
    }

    /// Row-major grid with unit spacing, `ceil(sqrt(n))` columns. Row 0 is
    /// the front of the head, the last row the back (occipital side).
    pub fn grid(n: usize) -> Self {
        let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
        let names = (0..n).map(|i| format!("E{:02}", i + 1)).collect();
        let positions = (0..n)
            .map(|i| [(i % cols) as f64, (i / cols) as f64])
            .collect();
        Self { names, positions }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Channels in the back quarter of the layout (largest y).
    pub fn posterior_channels(&self) -> Vec<usize> {
        let (lo, hi) = self
            .positions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[1]), hi.max(p[1]))
            });
        let cut = hi - 0.25 * (hi - lo);
        (0..self.len())
            .filter(|&i| self.positions[i][1] >= cut)
            .collect()
    }
}

/// A multi-channel time-domain signal, `[n_channels × n_samples]`, in µV.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecord {
    data: Array2<f64>,
    sample_rate_hz: f64,
    layout: Arc<ChannelLayout>,
    record_id: String,
    start_s: f64,
}

impl EegRecord {
    pub fn new(
        data: Array2<f64>,
        sample_rate_hz: f64,
        layout: Arc<ChannelLayout>,
        record_id: impl Into<String>,
    ) -> Result<Self> {
        let (n_channels, n_samples) = data.dim();
        if n_channels < 2 {
            return Err(Error::InvalidRecord(format!(
                "need at least 2 channels, got {n_channels}"
            )));
        }
        if n_samples < 1 {
            return Err(Error::InvalidRecord("record has no samples".into()));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidRecord(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if layout.len() != n_channels {
            return Err(Error::InvalidRecord(format!(
                "layout has {} channels, data has {n_channels}",
                layout.len()
            )));
        }
        if let Some((row, _)) = data
            .rows()
            .into_iter()
            .enumerate()
            .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidRecord(format!(
                "channel {row} contains a non-finite value"
            )));
        }
        Ok(Self {
            data,
            sample_rate_hz,
            layout,
            record_id: record_id.into(),
            start_s: 0.0,
        })
    }

    /// Absolute start time of this record within its session, in seconds.
    pub fn with_start(mut self, start_s: f64) -> Self {
        self.start_s = start_s;
        self
    }

    /// Same metadata, new samples. Used by the alterations, which never
    /// change the shape.
    pub(crate) fn with_data(&self, data: Array2<f64>, record_id: String) -> Self {
        debug_assert_eq!(data.dim(), self.data.dim());
        Self {
            data,
            sample_rate_hz: self.sample_rate_hz,
            layout: Arc::clone(&self.layout),
            record_id,
            start_s: self.start_s,
        }
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn layout(&self) -> &Arc<ChannelLayout> {
        &self.layout
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + self.n_samples() as f64 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub window_len_s: f64,
    pub stride_s: f64,
}

impl WindowSpec {
    pub fn new(window_len_s: f64, stride_s: f64) -> Self {
        Self {
            window_len_s,
            stride_s,
        }
    }

    /// `(window, stride)` in samples at `fs`.
    pub fn in_samples(&self, fs: f64) -> Result<(usize, usize)> {
        if !(self.window_len_s > 0.0 && self.stride_s > 0.0) {
            return Err(Error::config("window length and stride must be positive"));
        }
        let win = (self.window_len_s * fs).round() as usize;
        let stride = (self.stride_s * fs).round() as usize;
        if win < 8 {
            return Err(Error::config(format!(
                "window of {} s at {fs} Hz has {win} samples, need at least 8",
                self.window_len_s
            )));
        }
        if stride == 0 {
            return Err(Error::config("stride rounds to zero samples"));
        }
        Ok((win, stride))
    }
}

/// Cut a record into fixed-length windows; the trailing partial window is
/// dropped. Window ids are `<record_id>#w<k>`.
pub fn segment_windows(record: &EegRecord, spec: &WindowSpec) -> Result<Vec<EegRecord>> {
    let fs = record.sample_rate_hz();
    let (win, stride) = spec.in_samples(fs)?;
    let n = record.n_samples();
    if win > n {
        return Err(Error::WindowExceedsRecord {
            window: win,
            samples: n,
        });
    }
    let count = (n - win) / stride + 1;
    Ok((0..count)
        .map(|k| {
            let start = k * stride;
            let data = record.data.slice(s![.., start..start + win]).to_owned();
            EegRecord {
                data,
                sample_rate_hz: fs,
                layout: Arc::clone(&record.layout),
                record_id: format!("{}#w{k}", record.record_id),
                start_s: record.start_s + start as f64 / fs,
            }
        })
        .collect())
}

/// Seizure intervals of one session, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SeizureAnnotation {
    intervals: Vec<(f64, f64)>,
}

impl SeizureAnnotation {
    pub fn new(onsets_s: Vec<f64>, offsets_s: Vec<f64>) -> Result<Self> {
        if onsets_s.len() != offsets_s.len() {
            return Err(Error::config("onset and offset lists differ in length"));
        }
        let intervals: Vec<_> = onsets_s.into_iter().zip(offsets_s).collect();
        for (i, &(on, off)) in intervals.iter().enumerate() {
            if !(on >= 0.0 && on < off) {
                return Err(Error::config(format!(
                    "seizure {i}: need 0 <= onset < offset, got [{on}, {off}]"
                )));
            }
            if i > 0 && on < intervals[i - 1].1 {
                return Err(Error::config(format!(
                    "seizure {i} overlaps or precedes seizure {}",
                    i - 1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }
}

/// Pre-ictal band and inter-ictal guard, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeizureLabelConfig {
    pub preictal_far_s: f64,
    pub preictal_near_s: f64,
    pub interictal_guard_s: f64,
}

impl Default for SeizureLabelConfig {
    fn default() -> Self {
        Self {
            preictal_far_s: 300.0,
            preictal_near_s: 5.0,
            interictal_guard_s: 3600.0,
        }
    }
}

impl SeizureLabelConfig {
    fn validate(&self) -> Result<()> {
        if !(self.preictal_far_s > self.preictal_near_s && self.preictal_near_s >= 0.0) {
            return Err(Error::config("need preictal_far_s > preictal_near_s >= 0"));
        }
        if self.interictal_guard_s < self.preictal_far_s {
            return Err(Error::config("need interictal_guard_s >= preictal_far_s"));
        }
        Ok(())
    }
}

pub const PREICTAL: u8 = 1;
pub const INTERICTAL: u8 = 0;

/// Windows with parallel class ids and availability mask. A masked-out
/// window carries no class; its `labels` entry is meaningless.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindowSet {
    pub windows: Vec<EegRecord>,
    pub labels: Vec<u8>,
    pub mask: Vec<bool>,
}

impl LabeledWindowSet {
    pub fn new(windows: Vec<EegRecord>, labels: Vec<u8>, mask: Vec<bool>) -> Result<Self> {
        if windows.len() != labels.len() || windows.len() != mask.len() {
            return Err(Error::ShapeMismatch(
                "windows, labels and mask must have equal lengths".into(),
            ));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::config("class ids must be 0 or 1"));
        }
        Ok(Self {
            windows,
            labels,
            mask,
        })
    }

    /// Every window labeled.
    pub fn fully_labeled(windows: Vec<EegRecord>, labels: Vec<u8>) -> Result<Self> {
        let mask = vec![true; labels.len()];
        Self::new(windows, labels, mask)
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn n_labeled(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for (&l, &m) in self.labels.iter().zip(&self.mask) {
            if m {
                c[l as usize] += 1;
            }
        }
        c
    }

    /// Labeled windows only, as `(window, class)` pairs.
    pub fn labeled(&self) -> impl Iterator<Item = (&EegRecord, u8)> {
        self.windows
            .iter()
            .zip(&self.labels)
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|((w, &l), _)| (w, l))
    }
}

/// Gap between two closed intervals, zero when they touch or overlap.
fn interval_gap(a: (f64, f64), b: (f64, f64)) -> f64 {
    if a.1 < b.0 {
        b.0 - a.1
    } else if a.0 > b.1 {
        a.0 - b.1
    } else {
        0.0
    }
}

/// Label windows pre-ictal (1) or inter-ictal (0) from seizure times.
///
/// A window is pre-ictal when it sits inside `[onset - far, onset - near)`
/// of some seizure, inter-ictal when it is more than `guard` seconds from
/// every seizure. Everything else, ictal windows included, stays in the set
/// with `mask = false`.
pub fn label_seizure_windows(
    windows: Vec<EegRecord>,
    ann: &SeizureAnnotation,
    cfg: &SeizureLabelConfig,
) -> Result<LabeledWindowSet> {
    cfg.validate()?;
    let mut labels = Vec::with_capacity(windows.len());
    let mut mask = Vec::with_capacity(windows.len());
    for w in &windows {
        let span = (w.start_s(), w.end_s());
        let preictal = ann.intervals().iter().any(|&(on, _)| {
            span.0 >= on - cfg.preictal_far_s && span.1 < on - cfg.preictal_near_s
        });
        let interictal = ann
            .intervals()
            .iter()
            .all(|&iv| interval_gap(span, iv) > cfg.interictal_guard_s);
        match (preictal, interictal) {
            (true, _) => {
                labels.push(PREICTAL);
                mask.push(true);
            }
            (false, true) => {
                labels.push(INTERICTAL);
                mask.push(true);
            }
            _ => {
                labels.push(0);
                mask.push(false);
            }
        }
    }
    LabeledWindowSet::new(windows, labels, mask)
}

/// Drop the labels of `round(fraction · n)` labeled windows, stratified by
/// class. Returns `(unlabeled pool, remaining labeled set)`.
///
/// `n` counts labeled windows only; windows that were already masked out
/// belong to neither output.
pub fn exclude_labels(
    set: &LabeledWindowSet,
    fraction: f64,
    seed_value: u64,
) -> Result<(Vec<EegRecord>, LabeledWindowSet)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!(
            "exclusion fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, (&l, &m)) in set.labels.iter().zip(&set.mask).enumerate() {
        if m {
            by_class[l as usize].push(i);
        }
    }
    let n = by_class[0].len() + by_class[1].len();
    let total = (fraction * n as f64).round() as usize;

    let mut rng = seed::rng_for(seed_value, 0);
    // Largest-remainder apportionment; equal remainders are ordered randomly.
    let mut quota = [0usize; 2];
    let mut rema = [0.0f64; 2];
    for c in 0..2 {
        if n > 0 {
            let exact = total as f64 * by_class[c].len() as f64 / n as f64;
            quota[c] = exact.floor() as usize;
            rema[c] = exact - exact.floor();
        }
    }
    let mut order = [0usize, 1];
    order.shuffle(&mut rng);
    order.sort_by(|&a, &b| rema[b].total_cmp(&rema[a]));
    let mut left = total - quota[0] - quota[1];
    for &c in &order {
        if left > 0 && quota[c] < by_class[c].len() {
            quota[c] += 1;
            left -= 1;
        }
    }

    let mut excluded = vec![false; set.len()];
    for c in 0..2 {
        let mut idx = by_class[c].clone();
        idx.shuffle(&mut rng);
        for &i in &idx[..quota[c]] {
            excluded[i] = true;
        }
    }

    let mut unlabeled = Vec::with_capacity(total);
    let mut windows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..set.len() {
        if !set.mask[i] {
            continue;
        }
        if excluded[i] {
            unlabeled.push(set.windows[i].clone());
        } else {
            windows.push(set.windows[i].clone());
            labels.push(set.labels[i]);
        }
    }
    Ok((unlabeled, LabeledWindowSet::fully_labeled(windows, labels)?))
}
