//! Neural layers with two execution modes.
//!
//! Every layer has a whole-sequence `forward` over a [`Tensor`] and a
//! frame-by-frame `step` that carries explicit state. Both modes call the
//! same per-frame kernels, so a streamed sequence reproduces the offline
//! output exactly. All layers are causal in time.

mod block;
mod caham;
mod conv;
mod mask;
mod norm;
mod param;
mod stcm;
mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use block::{BlockState, ConvBlock};
pub use caham::Caham;
pub use conv::{Conv2d, ConvState};
pub use mask::{dual_path_mask, MaskHead};
pub use norm::{ClnState, CumulativeLayerNorm, Prelu, CLN_EPS};
pub use param::{Init, ParamRequest, ParamSource, Recorder};
pub use stcm::{STcm, StcmState, TcmStack, TcmState};
pub use tensor::Tensor;

pub(crate) use tensor::concat_frames;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Conv,
    Deconv,
    Stcm,
    Caham,
    MaskHead,
}

/// Static description of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_ch: usize,
    pub out_ch: usize,
    /// `(time, frequency)`
    pub kernel: (usize, usize),
    /// `(time, frequency)`; time stride is always 1.
    pub stride: (usize, usize),
    pub dilation: usize,
    pub norm: bool,
    pub act: bool,
}

impl LayerSpec {
    pub fn conv(in_ch: usize, out_ch: usize, kernel: (usize, usize), freq_stride: usize) -> Self {
        Self {
            kind: LayerKind::Conv,
            in_ch,
            out_ch,
            kernel,
            stride: (1, freq_stride),
            dilation: 1,
            norm: false,
            act: false,
        }
    }

    pub fn deconv(in_ch: usize, out_ch: usize, kernel: (usize, usize), freq_stride: usize) -> Self {
        Self {
            kind: LayerKind::Deconv,
            ..Self::conv(in_ch, out_ch, kernel, freq_stride)
        }
    }

    pub fn pointwise(in_ch: usize, out_ch: usize) -> Self {
        Self::conv(in_ch, out_ch, (1, 1), 1)
    }

    pub fn with_dilation(mut self, d: usize) -> Self {
        self.dilation = d;
        self
    }

    pub fn with_norm_act(mut self) -> Self {
        self.norm = true;
        self.act = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (kt, kf) = self.kernel;
        if ![1, 2, 5].contains(&kt) {
            return Err(Error::Config(format!(
                "time kernel must be 1, 2 or 5, got {kt}"
            )));
        }
        if self.stride.0 != 1 {
            return Err(Error::Config("temporal stride must be 1".into()));
        }
        if kf == 0 || self.stride.1 == 0 || self.dilation == 0 {
            return Err(Error::Config(format!("degenerate layer spec {self:?}")));
        }
        if self.in_ch == 0 || self.out_ch == 0 {
            return Err(Error::Config("layer channels must be positive".into()));
        }
        Ok(())
    }
}
