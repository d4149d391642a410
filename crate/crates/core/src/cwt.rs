//! Morlet continuous wavelet transform and scalogram tensors.
//!
//! For scale `s` (seconds) the coefficient at sample `b` is
//!
//! ```text
//! W(s, b) = dt / sqrt(s) * Σ_m x[m] · conj(ψ((m - b)·dt / s))
//! ψ(t)    = π^(-1/4) · exp(i·ω0·t) · exp(-t²/2)
//! ```
//!
//! with the signal zero-padded outside its support. Scales are chosen so the
//! wavelet centre frequencies `ω0 / (2π s)` are log-spaced over the
//! configured band, ordered from lowest to highest frequency. The kernel is
//! truncated at ±6 standard deviations of its Gaussian envelope.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Array3};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::EegRecord;

/// Kernel truncation radius in envelope standard deviations.
const KERNEL_RADIUS: f64 = 6.0;
/// Effective support used for the minimum-length check, in envelope
/// standard deviations (±3σ).
const EFFECTIVE_SUPPORT: f64 = 6.0;
/// Standardization floor.
pub const SIGMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CwtConfig {
    pub n_scales: usize,
    pub min_freq_hz: f64,
    pub max_freq_hz: f64,
    pub omega0: f64,
    pub time_columns: usize,
}

impl Default for CwtConfig {
    fn default() -> Self {
        Self {
            n_scales: 25,
            min_freq_hz: 1.0,
            max_freq_hz: 45.0,
            omega0: 6.0,
            time_columns: 8,
        }
    }
}

impl CwtConfig {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.n_scales < 2 {
            return Err(Error::config("need at least 2 scales"));
        }
        if !(self.min_freq_hz > 0.0 && self.min_freq_hz < self.max_freq_hz) {
            return Err(Error::config(format!(
                "need 0 < min_freq < max_freq, got [{}, {}]",
                self.min_freq_hz, self.max_freq_hz
            )));
        }
        if self.max_freq_hz > fs / 2.0 {
            return Err(Error::config(format!(
                "max frequency {} Hz exceeds Nyquist ({} Hz)",
                self.max_freq_hz,
                fs / 2.0
            )));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::config("omega0 must be positive"));
        }
        if self.time_columns == 0 {
            return Err(Error::config("time_columns must be positive"));
        }
        Ok(())
    }

    /// Centre frequencies, ascending.
    pub fn center_frequencies(&self) -> Vec<f64> {
        let ratio = self.max_freq_hz / self.min_freq_hz;
        (0..self.n_scales)
            .map(|k| self.min_freq_hz * ratio.powf(k as f64 / (self.n_scales - 1) as f64))
            .collect()
    }

    /// Scales in seconds, matching [`Self::center_frequencies`].
    pub fn scales(&self) -> Vec<f64> {
        self.center_frequencies()
            .into_iter()
            .map(|f| self.omega0 / (2.0 * PI * f))
            .collect()
    }

    /// Shortest signal accepted at `fs`: twice the effective support of the
    /// widest wavelet.
    pub fn min_signal_len(&self, fs: f64) -> usize {
        let widest = self.omega0 / (2.0 * PI * self.min_freq_hz);
        2 * (EFFECTIVE_SUPPORT * widest * fs).ceil() as usize
    }
}

pub fn morlet(t: f64, omega0: f64) -> Complex64 {
    let env = PI.powf(-0.25) * (-0.5 * t * t).exp();
    Complex64::from_polar(env, omega0 * t)
}

/// Precomputed transform for one `(config, sample rate, length)` triple.
pub struct CwtPlan {
    cfg: CwtConfig,
    fs: f64,
    n: usize,
    fft_len: usize,
    /// Per scale: half-width `K` and the FFT of the length-`2K+1` kernel.
    kernels: Vec<(usize, Vec<Complex64>)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CwtPlan {
    pub fn new(cfg: &CwtConfig, fs: f64, n: usize) -> Result<Self> {
        cfg.validate(fs)?;
        let min_len = cfg.min_signal_len(fs);
        if n < min_len {
            return Err(Error::SignalTooShort { len: n, min_len });
        }
        let dt = 1.0 / fs;
        let scales = cfg.scales();
        let max_half = scales
            .iter()
            .map(|s| (KERNEL_RADIUS * s * fs).ceil() as usize)
            .max()
            .unwrap_or(0);
        let fft_len = (n + 2 * max_half).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let kernels = scales
            .iter()
            .map(|&s| {
                let half = (KERNEL_RADIUS * s * fs).ceil() as usize;
                let norm = dt / s.sqrt();
                // h[j] = g[K - j] with g[k] = norm · conj(ψ(k·dt/s)), so that
                // W[b] = (x * h)[b + K].
                let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
                for (j, slot) in buf.iter_mut().enumerate().take(2 * half + 1) {
                    let k = half as f64 - j as f64;
                    *slot = morlet(k * dt / s, cfg.omega0).conj() * norm;
                }
                forward.process(&mut buf);
                (half, buf)
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            fs,
            n,
            fft_len,
            kernels,
            forward,
            inverse,
        })
    }

    pub fn config(&self) -> &CwtConfig {
        &self.cfg
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.fs
    }

    pub fn signal_len(&self) -> usize {
        self.n
    }

    /// `[n_scales × n]` complex coefficients, FFT-based linear convolution.
    pub fn transform(&self, signal: &[f64]) -> Result<Array2<Complex64>> {
        self.check_len(signal)?;
        let mut spec: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (s, &x) in spec.iter_mut().zip(signal) {
            *s = Complex64::new(x, 0.0);
        }
        self.forward.process(&mut spec);
        let scale = 1.0 / self.fft_len as f64;
        let mut out = Array2::zeros((self.kernels.len(), self.n));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (row, (half, kfft)) in self.kernels.iter().enumerate() {
            for ((b, x), k) in buf.iter_mut().zip(&spec).zip(kfft) {
                *b = x * k;
            }
            self.inverse.process(&mut buf);
            for t in 0..self.n {
                out[[row, t]] = buf[t + half] * scale;
            }
        }
        Ok(out)
    }

    /// Same result by direct summation over the truncated kernel. Slow;
    /// kept as a second route for cross-checking.
    pub fn transform_direct(&self, signal: &[f64]) -> Result<Array2<Complex64>> {
        self.check_len(signal)?;
        let dt = 1.0 / self.fs;
        let scales = self.cfg.scales();
        let mut out = Array2::zeros((scales.len(), self.n));
        for (row, &s) in scales.iter().enumerate() {
            let half = (KERNEL_RADIUS * s * self.fs).ceil() as isize;
            let norm = dt / s.sqrt();
            for b in 0..self.n as isize {
                let lo = (b - half).max(0);
                let hi = (b + half).min(self.n as isize - 1);
                let mut acc = Complex64::new(0.0, 0.0);
                for m in lo..=hi {
                    let t = (m - b) as f64 * dt / s;
                    acc += morlet(t, self.cfg.omega0).conj() * signal[m as usize];
                }
                out[[row, b as usize]] = acc * norm;
            }
        }
        Ok(out)
    }

    fn check_len(&self, signal: &[f64]) -> Result<()> {
        if signal.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "plan built for {} samples, got {}",
                self.n,
                signal.len()
            )));
        }
        Ok(())
    }
}

/// One-shot transform of a single channel.
pub fn cwt(signal: &[f64], fs: f64, cfg: &CwtConfig) -> Result<Array2<Complex64>> {
    CwtPlan::new(cfg, fs, signal.len())?.transform(signal)
}

/// Average equal contiguous blocks of `n / columns` samples along the time
/// axis. The trailing `n mod columns` samples are dropped.
pub fn block_average(mag: &Array2<f64>, columns: usize) -> Result<Array2<f64>> {
    let (rows, n) = mag.dim();
    if columns == 0 || n < columns {
        return Err(Error::SignalTooShort {
            len: n,
            min_len: columns.max(1),
        });
    }
    let block = n / columns;
    Ok(Array2::from_shape_fn((rows, columns), |(r, c)| {
        let start = c * block;
        (start..start + block).map(|t| mag[[r, t]]).sum::<f64>() / block as f64
    }))
}

/// Zero mean, unit variance over the whole plane; planes whose standard
/// deviation falls below [`SIGMA_FLOOR`] become all zeros.
pub fn standardize(plane: &mut Array2<f64>) {
    let n = plane.len() as f64;
    let mean = plane.sum() / n;
    let sd = (plane.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd < SIGMA_FLOOR {
        plane.fill(0.0);
    } else {
        plane.mapv_inplace(|v| (v - mean) / sd);
    }
}

/// Per-channel time-frequency magnitudes, `[n_channels × n_scales × time_columns]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub data: Array3<f64>,
}

impl Scalogram {
    pub fn shape(&self) -> [usize; 3] {
        let (c, s, t) = self.data.dim();
        [c, s, t]
    }
}

/// Scalogram of every channel: |CWT|, block-averaged to `time_columns`,
/// standardized per channel.
pub fn scalogram_to_tensor(record: &EegRecord, cfg: &CwtConfig) -> Result<Scalogram> {
    let plan = CwtPlan::new(cfg, record.sample_rate_hz(), record.n_samples())?;
    scalogram_with_plan(record, &plan)
}

pub fn scalogram_with_plan(record: &EegRecord, plan: &CwtPlan) -> Result<Scalogram> {
    let cfg = plan.config();
    if record.n_samples() < cfg.time_columns {
        return Err(Error::SignalTooShort {
            len: record.n_samples(),
            min_len: cfg.time_columns,
        });
    }
    if record.sample_rate_hz() != plan.sample_rate_hz() {
        return Err(Error::ShapeMismatch(format!(
            "plan built for {} Hz, record is {} Hz",
            plan.sample_rate_hz(),
            record.sample_rate_hz()
        )));
    }
    let mut out = Array3::zeros((record.n_channels(), cfg.n_scales, cfg.time_columns));
    for (c, row) in record.data().rows().into_iter().enumerate() {
        let coeffs = plan.transform(&row.to_vec())?;
        let mag = coeffs.mapv(|z| z.norm());
        let mut plane = block_average(&mag, cfg.time_columns)?;
        standardize(&mut plane);
        out.index_axis_mut(ndarray::Axis(0), c).assign(&plane);
    }
    Ok(Scalogram { data: out })
}
