//! Spectral algebra shared by every stage: band split/fusion, polar
//! decomposition, gain application with a supplied phase and residual
//! addition.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::frontend::Spectrogram;

/// Inclusive bin ranges of the low, middle and high bands.
///
/// Adjacent bands share their boundary bin: 8 kHz is bin 160 and 16 kHz is
/// bin 320 at 50 Hz per bin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandLayout {
    /// `[0, 160, 320, 480]` for the default layout.
    pub edges: [usize; 4],
}

impl Default for BandLayout {
    fn default() -> Self {
        Self {
            edges: [0, 160, 320, 480],
        }
    }
}

impl BandLayout {
    pub fn validate(&self) -> Result<()> {
        let e = self.edges;
        if e[0] != 0 {
            return Err(Error::Config("low band must start at bin 0".into()));
        }
        let w = e[1] - e[0];
        if w == 0 || e[2].checked_sub(e[1]) != Some(w) || e[3].checked_sub(e[2]) != Some(w) {
            return Err(Error::Config(format!(
                "bands must have equal non-zero widths, got edges {e:?}"
            )));
        }
        Ok(())
    }

    pub fn lb_range(&self) -> (usize, usize) {
        (self.edges[0], self.edges[1])
    }

    pub fn mb_range(&self) -> (usize, usize) {
        (self.edges[1], self.edges[2])
    }

    pub fn hb_range(&self) -> (usize, usize) {
        (self.edges[2], self.edges[3])
    }

    /// Bins per sub-band (161).
    pub fn band_bins(&self) -> usize {
        self.edges[1] - self.edges[0] + 1
    }

    /// Bins in the full spectrum (481).
    pub fn full_bins(&self) -> usize {
        self.edges[3] + 1
    }

    pub fn overlap_bins(&self) -> [usize; 2] {
        [self.edges[1], self.edges[2]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubBandSet {
    pub lb: Spectrogram,
    pub mb: Spectrogram,
    pub hb: Spectrogram,
}

/// Copy the three inclusive bin ranges out of a full-band spectrogram.
pub fn split_bands(full: &Spectrogram, layout: &BandLayout) -> Result<SubBandSet> {
    if full.bins() != layout.full_bins() {
        return dim_err(format!(
            "expected {} bins for band split, got {}",
            layout.full_bins(),
            full.bins()
        ));
    }
    let width = layout.band_bins();
    let take = |(lo, _hi): (usize, usize)| {
        let mut data = Vec::with_capacity(full.frames() * width);
        for t in 0..full.frames() {
            data.extend_from_slice(&full.frame(t)[lo..lo + width]);
        }
        full_like(full, width, data)
    };
    Ok(SubBandSet {
        lb: take(layout.lb_range()),
        mb: take(layout.mb_range()),
        hb: take(layout.hb_range()),
    })
}

/// Stack the bands back along frequency, averaging the two shared bins.
pub fn fuse_bands(bands: &SubBandSet, layout: &BandLayout) -> Result<Spectrogram> {
    let width = layout.band_bins();
    let frames = bands.lb.frames();
    for (name, b) in [("lb", &bands.lb), ("mb", &bands.mb), ("hb", &bands.hb)] {
        if b.bins() != width {
            return dim_err(format!("{name} has {} bins, expected {width}", b.bins()));
        }
        if b.frames() != frames {
            return dim_err(format!(
                "{name} has {} frames, lb has {frames}",
                b.frames()
            ));
        }
        if b.is_compressed() != bands.lb.is_compressed() {
            return Err(Error::State(format!(
                "{name} compression flag differs from lb"
            )));
        }
    }
    let full = layout.full_bins();
    let last = width - 1;
    let mut data = Vec::with_capacity(frames * full);
    for t in 0..frames {
        let (lb, mb, hb) = (bands.lb.frame(t), bands.mb.frame(t), bands.hb.frame(t));
        data.extend_from_slice(&lb[..last]);
        data.push((lb[last] + mb[0]) * 0.5);
        data.extend_from_slice(&mb[1..last]);
        data.push((mb[last] + hb[0]) * 0.5);
        data.extend_from_slice(&hb[1..]);
    }
    Ok(full_like(&bands.lb, full, data))
}

fn full_like(src: &Spectrogram, bins: usize, data: Vec<Complex64>) -> Spectrogram {
    Spectrogram::new(src.frames(), bins, data, src.bin_hz(), src.is_compressed())
        .expect("band copy preserves shape and finiteness")
}

/// Real `frames x bins` field (magnitudes, phases, gains).
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl RealGrid {
    pub fn new(frames: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != frames * bins {
            return dim_err(format!(
                "grid has {} values, expected {frames} x {bins}",
                data.len()
            ));
        }
        Ok(Self { frames, bins, data })
    }

    pub fn filled(frames: usize, bins: usize, value: f64) -> Self {
        Self {
            frames,
            bins,
            data: vec![value; frames * bins],
        }
    }

    pub fn same_shape(&self, other: &RealGrid) -> bool {
        self.frames == other.frames && self.bins == other.bins
    }
}

/// Polar form of a spectrogram.
#[derive(Clone, Debug, PartialEq)]
pub struct MagPhase {
    pub mag: RealGrid,
    /// Radians in `(-pi, pi]`; zero where the magnitude is zero.
    pub phase: RealGrid,
    pub bin_hz: f64,
    pub compressed: bool,
}

impl MagPhase {
    pub fn new(mag: RealGrid, phase: RealGrid, bin_hz: f64, compressed: bool) -> Result<Self> {
        if !mag.same_shape(&phase) {
            return dim_err("magnitude and phase grids differ in shape");
        }
        if mag.data.iter().any(|&m| m.is_nan() || m < 0.0) {
            return Err(Error::Data("magnitudes must be nonnegative".into()));
        }
        Ok(Self {
            mag,
            phase,
            bin_hz,
            compressed,
        })
    }
}

pub fn mag_phase(s: &Spectrogram) -> MagPhase {
    let (frames, bins) = (s.frames(), s.bins());
    let mut mag = Vec::with_capacity(s.data().len());
    let mut phase = Vec::with_capacity(s.data().len());
    for z in s.data() {
        let m = z.norm();
        mag.push(m);
        phase.push(if m == 0.0 { 0.0 } else { z.arg() });
    }
    MagPhase {
        mag: RealGrid { frames, bins, data: mag },
        phase: RealGrid { frames, bins, data: phase },
        bin_hz: s.bin_hz(),
        compressed: s.is_compressed(),
    }
}

/// `|X| * G` recombined with the phase of `noisy`; negative products are
/// clamped to zero magnitude.
pub fn apply_gain_with_phase(noisy: &MagPhase, gain: &RealGrid) -> Result<Spectrogram> {
    if !noisy.mag.same_shape(gain) {
        return dim_err(format!(
            "gain is {}x{}, magnitude is {}x{}",
            gain.frames, gain.bins, noisy.mag.frames, noisy.mag.bins
        ));
    }
    let data = noisy
        .mag
        .data
        .iter()
        .zip(&gain.data)
        .zip(&noisy.phase.data)
        .map(|((&m, &g), &p)| {
            let a = (m * g).max(0.0);
            let (sin, cos) = p.sin_cos();
            Complex64::new(a * cos, a * sin)
        })
        .collect();
    Spectrogram::new(
        noisy.mag.frames,
        noisy.mag.bins,
        data,
        noisy.bin_hz,
        noisy.compressed,
    )
}

pub fn add_residual(coarse: &Spectrogram, residual: &Spectrogram) -> Result<Spectrogram> {
    if coarse.frames() != residual.frames() || coarse.bins() != residual.bins() {
        return dim_err(format!(
            "residual is {}x{}, coarse estimate is {}x{}",
            residual.frames(),
            residual.bins(),
            coarse.frames(),
            coarse.bins()
        ));
    }
    if coarse.is_compressed() != residual.is_compressed() {
        return Err(Error::State(
            "coarse estimate and residual are in different compression domains".into(),
        ));
    }
    let data = coarse
        .data()
        .iter()
        .zip(residual.data())
        .map(|(a, b)| a + b)
        .collect();
    Ok(coarse.like(data))
}
