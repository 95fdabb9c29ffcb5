use crate::error::{dim_err, Error, Result};
use crate::nn::Tensor;

pub const CLN_EPS: f64 = 1e-5;

/// Running statistics of a cumulative layer norm.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClnState {
    /// Frames consumed so far.
    pub frames: u64,
    /// Entries consumed so far (`frames * freq * channels`).
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

/// Cumulative layer norm: frame `t` is normalised with the mean and variance
/// of every entry of frames `0..=t`, then scaled and shifted per channel.
#[derive(Clone, Debug)]
pub struct CumulativeLayerNorm {
    gain: Vec<f32>,
    bias: Vec<f32>,
}

impl CumulativeLayerNorm {
    pub fn new(gain: &[f32], bias: &[f32]) -> Result<Self> {
        if gain.len() != bias.len() || gain.is_empty() {
            return dim_err(format!(
                "cLN gain/bias lengths {} and {} must match and be positive",
                gain.len(),
                bias.len()
            ));
        }
        Ok(Self {
            gain: gain.to_vec(),
            bias: bias.to_vec(),
        })
    }

    pub fn channels(&self) -> usize {
        self.gain.len()
    }

    pub fn init_state(&self) -> ClnState {
        ClnState::default()
    }

    /// Normalise one `freq x channels` frame in place, updating the statistics.
    pub fn step_in_place(&self, state: &mut ClnState, frame: &mut [f32]) -> Result<()> {
        let c = self.channels();
        if frame.is_empty() || !frame.len().is_multiple_of(c) {
            return dim_err(format!(
                "frame of {} values is not a whole number of {c}-channel bins",
                frame.len()
            ));
        }
        let (mut s, mut sq) = (0.0f64, 0.0f64);
        for &v in frame.iter() {
            let v = f64::from(v);
            s += v;
            sq += v * v;
        }
        state.frames += 1;
        state.count += frame.len() as u64;
        state.sum += s;
        state.sum_sq += sq;

        let n = state.count as f64;
        let mean = state.sum / n;
        let var = (state.sum_sq / n - mean * mean).max(0.0);
        let inv = 1.0 / (var + CLN_EPS).sqrt();
        for bin in frame.chunks_exact_mut(c) {
            for ((v, &g), &b) in bin.iter_mut().zip(&self.gain).zip(&self.bias) {
                let z = (f64::from(*v) - mean) * inv;
                *v = (z as f32) * g + b;
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.channels() != self.channels() {
            return dim_err(format!(
                "cLN has {} channels, input has {}",
                self.channels(),
                x.channels()
            ));
        }
        let mut y = x.clone();
        let mut state = self.init_state();
        for t in 0..y.frames() {
            self.step_in_place(&mut state, y.frame_mut(t))?;
        }
        Ok(y)
    }
}

/// Parametric ReLU with one learned slope per channel.
#[derive(Clone, Debug)]
pub struct Prelu {
    slope: Vec<f32>,
}

impl Prelu {
    pub const DEFAULT_SLOPE: f32 = 0.25;

    pub fn new(slope: &[f32]) -> Result<Self> {
        if slope.is_empty() {
            return Err(Error::Config("PReLU needs at least one channel".into()));
        }
        Ok(Self {
            slope: slope.to_vec(),
        })
    }

    pub fn apply_in_place(&self, frame: &mut [f32]) {
        for bin in frame.chunks_exact_mut(self.slope.len()) {
            for (v, &a) in bin.iter_mut().zip(&self.slope) {
                if *v < 0.0 {
                    *v *= a;
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.channels() != self.slope.len() {
            return dim_err("PReLU channel count mismatch");
        }
        let mut y = x.clone();
        self.apply_in_place(y.data_mut());
        Ok(y)
    }
}
