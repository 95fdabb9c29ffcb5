//! Waveform <-> spectrogram conversion.
//!
//! Analysis uses a periodic Hann window of 960 samples (20 ms at 48 kHz) with
//! a 480-sample hop and a 960-point FFT, giving 481 bins at 50 Hz spacing.
//! Signals are left-padded with `window_len - hop` zeros so that frame `t`
//! ends at input sample `(t + 1) * hop - 1`; a streaming analyser that emits a
//! frame every hop therefore produces exactly the offline frame sequence.
//!
//! Synthesis is a weighted overlap-add with the analysis window and a
//! per-sample normalisation by the summed squared window.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The only sample rate the engine accepts.
pub const SAMPLE_RATE: u32 = 48_000;

/// Normaliser values below this are treated as uncovered samples.
const NORM_FLOOR: f64 = 1e-8;

/// Mono 48 kHz audio.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Config(format!(
                "sample rate {sample_rate} Hz is not supported, expected {SAMPLE_RATE} Hz"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`.
    Hann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    /// Magnitude compression exponent.
    pub beta: f64,
    pub window: WindowKind,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            window_len: 960,
            hop: 480,
            fft_size: 960,
            beta: 0.5,
            window: WindowKind::Hann,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || !self.window_len.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window length must be even and positive, got {}",
                self.window_len
            )));
        }
        if self.hop * 2 != self.window_len {
            return Err(Error::Config(format!(
                "hop must be half the window length ({}), got {}",
                self.window_len / 2,
                self.hop
            )));
        }
        if self.fft_size < self.window_len {
            return Err(Error::Config(format!(
                "fft size {} is shorter than the window ({})",
                self.fft_size, self.window_len
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!(
                "compression exponent must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        f64::from(SAMPLE_RATE) / self.fft_size as f64
    }

    /// Zeros prepended to the signal before framing.
    pub fn left_pad(&self) -> usize {
        self.window_len - self.hop
    }

    /// Number of analysis frames for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            len.div_ceil(self.hop) + self.left_pad() / self.hop
        }
    }

    pub fn frames_per_second(&self) -> f64 {
        f64::from(SAMPLE_RATE) / self.hop as f64
    }
}

/// Complex time-frequency matrix, frame-major (`frames x bins`).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    frames: usize,
    bins: usize,
    bin_hz: f64,
    compressed: bool,
    data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn new(
        frames: usize,
        bins: usize,
        data: Vec<Complex64>,
        bin_hz: f64,
        compressed: bool,
    ) -> Result<Self> {
        if data.len() != frames * bins {
            return Err(Error::Dimension(format!(
                "spectrogram data has {} entries, expected {frames} x {bins}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite spectrogram entry at frame {}, bin {}",
                i / bins.max(1),
                i % bins.max(1)
            )));
        }
        Ok(Self {
            frames,
            bins,
            bin_hz,
            compressed,
            data,
        })
    }

    pub fn zeros(frames: usize, bins: usize, bin_hz: f64) -> Self {
        Self {
            frames,
            bins,
            bin_hz,
            compressed: false,
            data: vec![Complex64::new(0.0, 0.0); frames * bins],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn is_compressed(&self) -> bool {
        self.compressed
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        &mut self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.data[t * self.bins + f]
    }

    pub fn set(&mut self, t: usize, f: usize, value: Complex64) {
        self.data[t * self.bins + f] = value;
    }

    pub(crate) fn with_compressed(mut self, compressed: bool) -> Self {
        self.compressed = compressed;
        self
    }

    /// Same shape and metadata, new entries.
    pub(crate) fn like(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            frames: self.frames,
            bins: self.bins,
            bin_hz: self.bin_hz,
            compressed: self.compressed,
            data,
        }
    }
}

/// Planned analysis/synthesis transforms for one [`FrontendConfig`].
///
/// Cheap to clone; the FFT plans are shared.
#[derive(Clone)]
pub struct Frontend {
    cfg: FrontendConfig,
    window: Vec<f64>,
    /// Summed squared window for each position within a hop, in overlap order.
    overlap_norm: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Frontend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frontend").field("cfg", &self.cfg).finish()
    }
}

impl Frontend {
    pub fn new(cfg: FrontendConfig) -> Result<Self> {
        cfg.validate()?;
        let window = match cfg.window {
            WindowKind::Hann => hann_periodic(cfg.window_len),
        };
        let hop = cfg.hop;
        let overlap_norm = (0..hop)
            .map(|i| {
                let earlier = window[i + hop] * window[i + hop];
                let later = window[i] * window[i];
                earlier + later
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(cfg.fft_size);
        let inverse = planner.plan_fft_inverse(cfg.fft_size);
        Ok(Self {
            cfg,
            window,
            overlap_norm,
            forward,
            inverse,
        })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.cfg
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Synthesis normaliser for each sample offset inside a hop.
    pub fn overlap_norm(&self) -> &[f64] {
        &self.overlap_norm
    }

    /// Windowed FFT of one frame of `window_len` samples, returning `fft_size/2 + 1` bins.
    pub fn analyze_frame(&self, frame: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(frame.len(), self.cfg.window_len);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.cfg.fft_size];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
            b.re = x * w;
        }
        self.forward.process(&mut buf);
        buf.truncate(self.cfg.bins());
        buf
    }

    /// Inverse real FFT of one frame, multiplied by the synthesis window.
    ///
    /// Imaginary parts of the DC and Nyquist bins are ignored.
    pub fn synthesize_frame(&self, spec: &[Complex64]) -> Vec<f64> {
        let n = self.cfg.fft_size;
        let bins = self.cfg.bins();
        debug_assert_eq!(spec.len(), bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..bins].copy_from_slice(spec);
        buf[0].im = 0.0;
        if n.is_multiple_of(2) {
            buf[n / 2].im = 0.0;
        }
        for k in 1..n.div_ceil(2) {
            buf[n - k] = spec[k].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter()
            .take(self.cfg.window_len)
            .zip(&self.window)
            .map(|(z, &w)| z.re * scale * w)
            .collect()
    }

    pub fn stft(&self, w: &Waveform) -> Result<Spectrogram> {
        if w.is_empty() {
            return Err(Error::Data("cannot analyse an empty waveform".into()));
        }
        let cfg = &self.cfg;
        let frames = cfg.frames_for(w.len());
        let pad = cfg.left_pad();
        let mut padded = vec![0.0; (frames - 1) * cfg.hop + cfg.window_len];
        padded[pad..pad + w.len()].copy_from_slice(w.samples());

        let bins = cfg.bins();
        let mut data = Vec::with_capacity(frames * bins);
        for t in 0..frames {
            let start = t * cfg.hop;
            data.extend(self.analyze_frame(&padded[start..start + cfg.window_len]));
        }
        Spectrogram::new(frames, bins, data, cfg.bin_hz(), false)
    }

    /// Overlap-add synthesis of every sample covered by two frames:
    /// `(frames - 1) * hop` samples aligned with the original signal.
    pub fn istft(&self, s: &Spectrogram) -> Result<Waveform> {
        let cfg = &self.cfg;
        if s.is_compressed() {
            return Err(Error::State(
                "istft needs a decompressed spectrogram".into(),
            ));
        }
        if s.bins() != cfg.bins() {
            return Err(Error::Dimension(format!(
                "istft expects {} bins, got {}",
                cfg.bins(),
                s.bins()
            )));
        }
        let frames = s.frames();
        if frames == 0 {
            return Waveform::new(Vec::new(), SAMPLE_RATE);
        }
        let total = (frames - 1) * cfg.hop + cfg.window_len;
        let mut acc = vec![0.0; total];
        let mut norm = vec![0.0; total];
        for t in 0..frames {
            let grain = self.synthesize_frame(s.frame(t));
            let start = t * cfg.hop;
            for (i, (&g, &w)) in grain.iter().zip(&self.window).enumerate() {
                acc[start + i] += g;
                norm[start + i] += w * w;
            }
        }
        let pad = cfg.left_pad();
        let out_len = (frames - 1) * cfg.hop;
        let samples = acc[pad..pad + out_len]
            .iter()
            .zip(&norm[pad..pad + out_len])
            .map(|(&a, &n)| if n < NORM_FLOOR { 0.0 } else { a / n })
            .collect();
        Waveform::new(samples, SAMPLE_RATE)
    }
}

pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

pub fn stft(w: &Waveform, cfg: &FrontendConfig) -> Result<Spectrogram> {
    Frontend::new(cfg.clone())?.stft(w)
}

pub fn istft(s: &Spectrogram, cfg: &FrontendConfig) -> Result<Waveform> {
    Frontend::new(cfg.clone())?.istft(s)
}

/// Raise every magnitude to `beta`, keeping the phase.
pub fn compress(s: &Spectrogram, beta: f64) -> Result<Spectrogram> {
    if s.is_compressed() {
        return Err(Error::State("spectrogram is already compressed".into()));
    }
    check_beta(beta)?;
    Ok(s.like(rescale_magnitudes(s.data(), beta)).with_compressed(true))
}

/// Inverse of [`compress`]: magnitudes raised to `1 / beta`.
pub fn decompress(s: &Spectrogram, beta: f64) -> Result<Spectrogram> {
    if !s.is_compressed() {
        return Err(Error::State("spectrogram is not compressed".into()));
    }
    check_beta(beta)?;
    Ok(s.like(rescale_magnitudes(s.data(), 1.0 / beta))
        .with_compressed(false))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "compression exponent must lie in (0, 1], got {beta}"
        )))
    }
}

pub(crate) fn rescale_magnitudes(data: &[Complex64], exponent: f64) -> Vec<Complex64> {
    data.iter()
        .map(|&z| {
            let m = z.norm();
            if m == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                // Scaling re and im by one factor leaves the angle untouched.
                z * (m.powf(exponent) / m)
            }
        })
        .collect()
}
