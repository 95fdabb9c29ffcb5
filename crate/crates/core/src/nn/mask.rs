use crate::bands::RealGrid;
use crate::error::{dim_err, Result};
use crate::nn::{Conv2d, ConvState, LayerKind, LayerSpec, ParamSource, Tensor};

/// `tanh(a) * sigmoid(b)`, elementwise, in f64.
pub fn dual_path_mask(a: &[f32], b: &[f32]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&a, &b)| {
            let s = 1.0 / (1.0 + (-(b as f64)).exp());
            (a as f64).tanh() * s
        })
        .collect()
}

/// Two 1x1 convolutions `C -> 1` combined by [`dual_path_mask`].
#[derive(Clone, Debug)]
pub struct MaskHead {
    tanh: Conv2d,
    sigmoid: Conv2d,
}

impl MaskHead {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize, freq: usize) -> Result<Self> {
        let spec = LayerSpec::pointwise(channels, 1);
        Ok(Self {
            tanh: Conv2d::load(src, &format!("{prefix}.tanh"), spec, freq, freq)?,
            sigmoid: Conv2d::load(src, &format!("{prefix}.sigmoid"), spec, freq, freq)?,
        })
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            kind: LayerKind::MaskHead,
            ..*self.tanh.spec()
        }
    }

    pub fn freq(&self) -> usize {
        self.tanh.f_out()
    }

    pub fn step(&self, frame: &[f32]) -> Result<Vec<f64>> {
        let len = frame.len();
        let a = self.tanh.step(&mut ConvState::new(0, len), frame)?;
        let b = self.sigmoid.step(&mut ConvState::new(0, len), frame)?;
        Ok(dual_path_mask(&a, &b))
    }

    pub fn forward(&self, x: &Tensor) -> Result<RealGrid> {
        if x.freq() != self.freq() {
            return dim_err(format!(
                "mask head expects {} bins, got {}",
                self.freq(),
                x.freq()
            ));
        }
        let mut data = Vec::with_capacity(x.frames() * x.freq());
        for t in 0..x.frames() {
            data.extend(self.step(x.frame(t))?);
        }
        RealGrid::new(x.frames(), x.freq(), data)
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.tanh.macs_per_frame() + self.sigmoid.macs_per_frame()
    }
}
