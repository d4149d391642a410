//! Synthetic EEG with a power-law spectrum and distance-decaying
//! inter-channel correlation.
//!
//! Each channel starts as white Gaussian noise, is shaped in the frequency
//! domain by `f^(-α/2)` (so the PSD falls as `f^-α`) and normalized to unit
//! variance. Channels are then mixed by the symmetric square root of
//! `K(i, j) = exp(-d(i, j) / λ)`, which makes `K` the expected correlation
//! matrix. An optional 10 Hz component marks class-1 records.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{ChannelLayout, EegRecord};

/// Floor added to power estimates before taking logs.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

/// Narrowband marker injected into class-1 records.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEffect {
    pub amplitude: f64,
    pub frequency_hz: f64,
    /// Channels receiving the component. Empty means the posterior quarter
    /// of the layout.
    pub channels: Vec<usize>,
}

impl ClassEffect {
    pub fn alpha(amplitude: f64) -> Self {
        Self {
            amplitude,
            frequency_hz: 10.0,
            channels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_channels: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub spectral_exponent: f64,
    pub correlation_scale: f64,
    /// Overall amplitude in µV applied after mixing.
    pub amplitude_uv: f64,
    pub class_effect: Option<ClassEffect>,
    pub layout: Option<Arc<ChannelLayout>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_channels: 32,
            duration_s: 60.0,
            sample_rate_hz: 256.0,
            spectral_exponent: 1.0,
            correlation_scale: 1.5,
            amplitude_uv: 20.0,
            class_effect: None,
            layout: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n_channels < 2 {
            return Err(Error::config("synthetic EEG needs at least 2 channels"));
        }
        if !(self.sample_rate_hz > 0.0) || self.n_samples() < 64 {
            return Err(Error::config(
                "duration_s * sample_rate_hz must give at least 64 samples",
            ));
        }
        if !(self.spectral_exponent >= 0.0) {
            return Err(Error::config("spectral exponent must be >= 0"));
        }
        if !(self.correlation_scale > 0.0) {
            return Err(Error::config(format!(
                "correlation scale must be positive, got {}",
                self.correlation_scale
            )));
        }
        if let Some(l) = &self.layout {
            if l.len() != self.n_channels {
                return Err(Error::config("layout size differs from n_channels"));
            }
        }
        if let Some(e) = &self.class_effect {
            if e.channels.iter().any(|&c| c >= self.n_channels) {
                return Err(Error::config("class-effect channel out of range"));
            }
        }
        Ok(())
    }
}

/// Symmetric square root of the correlation kernel for `layout`.
pub fn mixing_matrix(layout: &ChannelLayout, correlation_scale: f64) -> DMatrix<f64> {
    let n = layout.len();
    let k = DMatrix::from_fn(n, n, |i, j| (-layout.distance(i, j) / correlation_scale).exp());
    let eig = SymmetricEigen::new(k);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

fn shaped_noise(n: usize, fs: f64, alpha: f64, rng: &mut impl Rng, fft: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    fft.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex64::new(0.0, 0.0);
    for k in 1..n {
        let bin = k.min(n - k);
        let f = bin as f64 * fs / n as f64;
        buf[k] *= f.powf(-alpha / 2.0);
    }
    fft.plan_fft_inverse(n).process(&mut buf);
    let mut x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    for v in &mut x {
        *v = (*v - mean) / sd;
    }
    x
}

/// Generate one record. Bit-identical for identical configs.
pub fn generate_eeg(cfg: &SynthConfig) -> Result<EegRecord> {
    cfg.validate()?;
    let layout = cfg
        .layout
        .clone()
        .unwrap_or_else(|| Arc::new(ChannelLayout::grid(cfg.n_channels)));
    let n = cfg.n_samples();
    let fs = cfg.sample_rate_hz;
    let mut rng = seed::rng_for(cfg.seed, 0);
    let mut planner = FftPlanner::new();

    let mut sources = DMatrix::zeros(cfg.n_channels, n);
    for c in 0..cfg.n_channels {
        let row = shaped_noise(n, fs, cfg.spectral_exponent, &mut rng, &mut planner);
        for (t, v) in row.into_iter().enumerate() {
            sources[(c, t)] = v;
        }
    }
    let mixed = mixing_matrix(&layout, cfg.correlation_scale) * sources;

    let mut data = Array2::from_shape_fn((cfg.n_channels, n), |(c, t)| cfg.amplitude_uv * mixed[(c, t)]);
    if let Some(effect) = &cfg.class_effect {
        let channels = if effect.channels.is_empty() {
            layout.posterior_channels()
        } else {
            effect.channels.clone()
        };
        for c in channels {
            let phase = rng.random::<f64>() * 2.0 * PI;
            for t in 0..n {
                let time = t as f64 / fs;
                data[[c, t]] += cfg.amplitude_uv
                    * effect.amplitude
                    * (2.0 * PI * effect.frequency_hz * time + phase).sin();
            }
        }
    }
    EegRecord::new(data, fs, layout, format!("synth-{:016x}", cfg.seed))
}

/// Welch power spectral density of one channel: Hann-windowed segments of
/// `seg_len` samples with 50 % overlap. Returns `(frequencies, power)` for
/// bins `0..=seg_len/2`.
pub fn welch_psd(x: &[f64], fs: f64, seg_len: usize) -> (Vec<f64>, Vec<f64>) {
    let seg_len = seg_len.min(x.len());
    let hop = (seg_len / 2).max(1);
    let window: Vec<f64> = (0..seg_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg_len as f64).cos())
        .collect();
    let wnorm: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(seg_len);
    let n_bins = seg_len / 2 + 1;
    let mut power = vec![0.0; n_bins];
    let mut segments = 0usize;
    let mut start = 0;
    while start + seg_len <= x.len() {
        let seg = &x[start..start + seg_len];
        let mean = seg.iter().sum::<f64>() / seg_len as f64;
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr() / (wnorm * fs);
        }
        segments += 1;
        start += hop;
    }
    for p in &mut power {
        *p /= segments as f64;
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / seg_len as f64).collect();
    (freqs, power)
}

/// Least-squares slope of `log10 P` against `log10 f` over
/// `[1 Hz, Nyquist / 2]`, one value per channel.
pub fn estimate_spectral_slope(record: &EegRecord) -> Result<Vec<f64>> {
    if record.n_samples() < 256 {
        return Err(Error::SignalTooShort {
            len: record.n_samples(),
            min_len: 256,
        });
    }
    let fs = record.sample_rate_hz();
    let hi = fs / 4.0;
    record
        .data()
        .rows()
        .into_iter()
        .map(|row| {
            let x: Vec<f64> = row.to_vec();
            let (freqs, power) = welch_psd(&x, fs, 256);
            let pts: Vec<(f64, f64)> = freqs
                .iter()
                .zip(&power)
                .filter(|(&f, _)| f >= 1.0 && f <= hi)
                .map(|(&f, &p)| (f.log10(), (p + SPECTRAL_FLOOR).log10()))
                .collect();
            if pts.len() < 2 {
                return Err(Error::Degenerate(format!(
                    "fewer than two frequency bins in [1, {hi}] Hz"
                )));
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Ok(sxy / sxx)
        })
        .collect()
}
