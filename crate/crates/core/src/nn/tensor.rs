use crate::error::{dim_err, Error, Result};

/// Frame-major feature map: `frames x freq x channels`, channels innermost.
///
/// A `freq x channels` frame is therefore also a flat vector of length
/// `freq * channels`, which is how the bottleneck is fed to the temporal
/// modules without copying.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    frames: usize,
    freq: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(frames: usize, freq: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if freq == 0 || channels == 0 {
            return dim_err(format!("tensor dims must be positive, got {freq} x {channels}"));
        }
        if data.len() != frames * freq * channels {
            return dim_err(format!(
                "tensor data has {} values, expected {frames} x {freq} x {channels}",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("tensor contains non-finite values".into()));
        }
        Ok(Self {
            frames,
            freq,
            channels,
            data,
        })
    }

    pub fn zeros(frames: usize, freq: usize, channels: usize) -> Self {
        Self {
            frames,
            freq,
            channels,
            data: vec![0.0; frames * freq * channels],
        }
    }

    pub(crate) fn from_raw(frames: usize, freq: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), frames * freq * channels);
        Self {
            frames,
            freq,
            channels,
            data,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn freq(&self) -> usize {
        self.freq
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame_len(&self) -> usize {
        self.freq * self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        let n = self.frame_len();
        &mut self.data[t * n..(t + 1) * n]
    }

    pub fn get(&self, t: usize, f: usize, c: usize) -> f32 {
        self.data[(t * self.freq + f) * self.channels + c]
    }

    pub fn set(&mut self, t: usize, f: usize, c: usize, v: f32) {
        self.data[(t * self.freq + f) * self.channels + c] = v;
    }

    /// Reinterpret each frame with a different `freq x channels` split.
    pub fn reshape(self, freq: usize, channels: usize) -> Result<Self> {
        if freq * channels != self.frame_len() {
            return dim_err(format!(
                "cannot reshape {}x{} frames into {freq}x{channels}",
                self.freq, self.channels
            ));
        }
        Ok(Self {
            frames: self.frames,
            freq,
            channels,
            data: self.data,
        })
    }

    /// Concatenate along the channel axis.
    pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
        let Some(first) = parts.first() else {
            return dim_err("nothing to concatenate");
        };
        if parts
            .iter()
            .any(|p| p.frames != first.frames || p.freq != first.freq)
        {
            return dim_err("concatenated tensors must share frames and frequency");
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let frames = first.frames;
        let freq = first.freq;
        let mut data = Vec::with_capacity(frames * freq * channels);
        for t in 0..frames {
            let slices: Vec<&[f32]> = parts.iter().map(|p| p.frame(t)).collect();
            concat_frame_into(&slices, parts.iter().map(|p| p.channels), freq, &mut data);
        }
        Ok(Tensor::from_raw(frames, freq, channels, data))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

/// Channel-concatenate single frames (`freq x c_i` each) onto `out`.
pub(crate) fn concat_frame_into<I>(frames: &[&[f32]], channels: I, freq: usize, out: &mut Vec<f32>)
where
    I: IntoIterator<Item = usize> + Clone,
{
    let chans: Vec<usize> = channels.into_iter().collect();
    for f in 0..freq {
        for (frame, &c) in frames.iter().zip(&chans) {
            out.extend_from_slice(&frame[f * c..(f + 1) * c]);
        }
    }
}

pub(crate) fn concat_frames(frames: &[&[f32]], channels: &[usize], freq: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(freq * channels.iter().sum::<usize>());
    concat_frame_into(frames, channels.iter().copied(), freq, &mut out);
    out
}
