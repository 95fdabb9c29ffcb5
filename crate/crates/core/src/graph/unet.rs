//! Encoder, decoder and bottleneck pieces shared by every sub-network.

use std::sync::Arc;

use crate::error::{dim_err, Result};
use crate::graph::ArchConfig;
use crate::nn::{
    concat_frames, BlockState, Caham, Conv2d, ConvBlock, ConvState, LayerSpec, ParamSource,
    TcmStack, TcmState, Tensor,
};

/// Stack of strided conv blocks; keeps every level's output for the skips.
#[derive(Clone, Debug)]
pub(crate) struct Encoder {
    blocks: Vec<ConvBlock>,
}

impl Encoder {
    pub(crate) fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        cfg: &ArchConfig,
        freq: &[usize],
        in_ch: usize,
        channels: usize,
    ) -> Result<Self> {
        let blocks = (0..cfg.depth)
            .map(|i| {
                let ci = if i == 0 { in_ch } else { channels };
                let spec = LayerSpec::conv(ci, channels, cfg.kernel(i), 2).with_norm_act();
                ConvBlock::load(src, &format!("{prefix}.{i}"), spec, freq[i], freq[i + 1])
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub(crate) fn forward(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        let mut outs: Vec<Tensor> = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let y = block.forward(outs.last().unwrap_or(x))?;
            outs.push(y);
        }
        Ok(outs)
    }

    pub(crate) fn init_state(&self) -> Vec<BlockState> {
        self.blocks.iter().map(ConvBlock::init_state).collect()
    }

    pub(crate) fn step(&self, state: &mut [BlockState], frame: &[f32]) -> Result<Vec<Vec<f32>>> {
        let mut outs: Vec<Vec<f32>> = Vec::with_capacity(self.blocks.len());
        for (block, st) in self.blocks.iter().zip(state) {
            let y = block.step(st, outs.last().map_or(frame, Vec::as_slice))?;
            outs.push(y);
        }
        Ok(outs)
    }

    pub(crate) fn macs_per_frame(&self) -> u64 {
        self.blocks.iter().map(|b| b.conv().macs_per_frame()).sum()
    }
}

/// Transposed-conv blocks; each consumes the previous output concatenated
/// with the mirrored encoder level.
#[derive(Clone, Debug)]
pub(crate) struct Decoder {
    blocks: Vec<ConvBlock>,
    channels: usize,
}

impl Decoder {
    pub(crate) fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        cfg: &ArchConfig,
        freq: &[usize],
        channels: usize,
    ) -> Result<Self> {
        let depth = cfg.depth;
        let blocks = (0..depth)
            .map(|i| {
                let level = depth - 1 - i;
                let spec = LayerSpec::deconv(2 * channels, channels, cfg.kernel(level), 2).with_norm_act();
                ConvBlock::load(src, &format!("{prefix}.{i}"), spec, freq[level + 1], freq[level])
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks, channels })
    }

    /// `skips` are the encoder outputs, shallowest first.
    pub(crate) fn forward(&self, bottleneck: &Tensor, skips: &[Tensor]) -> Result<Tensor> {
        let mut h = bottleneck.clone();
        for (block, skip) in self.blocks.iter().zip(skips.iter().rev()) {
            h = block.forward(&Tensor::concat_channels(&[&h, skip])?)?;
        }
        Ok(h)
    }

    pub(crate) fn init_state(&self) -> Vec<BlockState> {
        self.blocks.iter().map(ConvBlock::init_state).collect()
    }

    pub(crate) fn step(
        &self,
        state: &mut [BlockState],
        bottleneck: &[f32],
        skips: &[Vec<f32>],
    ) -> Result<Vec<f32>> {
        let c = self.channels;
        let mut h = bottleneck.to_vec();
        for ((block, st), skip) in self.blocks.iter().zip(state).zip(skips.iter().rev()) {
            let freq = block.conv().f_in();
            let input = concat_frames(&[&h, skip], &[c, c], freq);
            h = block.step(st, &input)?;
        }
        Ok(h)
    }

    pub(crate) fn macs_per_frame(&self) -> u64 {
        self.blocks.iter().map(|b| b.conv().macs_per_frame()).sum()
    }
}

/// Bottleneck: flatten, S-TCM groups, attention fusion, unflatten.
#[derive(Clone, Debug)]
pub(crate) struct Temporal {
    tcm: Arc<TcmStack>,
    att: Caham,
    freq: usize,
    channels: usize,
}

impl Temporal {
    pub(crate) fn new(tcm: Arc<TcmStack>, att: Caham, freq: usize, channels: usize) -> Result<Self> {
        if tcm.width() != freq * channels {
            return dim_err(format!(
                "S-TCM width {} does not match the {freq}x{channels} bottleneck",
                tcm.width()
            ));
        }
        Ok(Self {
            tcm,
            att,
            freq,
            channels,
        })
    }

    pub(crate) fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let flat = x.clone().reshape(1, self.freq * self.channels)?;
        let groups = self.tcm.forward(&flat)?;
        self.att.forward(&groups)?.reshape(self.freq, self.channels)
    }

    pub(crate) fn init_state(&self) -> TcmState {
        self.tcm.init_state()
    }

    pub(crate) fn step(&self, state: &mut TcmState, frame: &[f32]) -> Result<Vec<f32>> {
        let groups = self.tcm.step(state, frame)?;
        let refs: Vec<&[f32]> = groups.iter().map(Vec::as_slice).collect();
        self.att.step(&refs)
    }

    /// S-TCM and attention MACs (the S-TCM is counted at every use).
    pub(crate) fn macs_per_frame(&self) -> u64 {
        self.tcm.macs_per_frame() + self.att.macs_per_frame(self.tcm.width())
    }
}

/// Gated injection of a guide feature:
/// `target + sigmoid(conv(concat(target, guide))) * guide`.
#[derive(Clone, Debug)]
pub struct Interaction {
    gate: Conv2d,
    channels: usize,
}

impl Interaction {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize, freq: usize) -> Result<Self> {
        let spec = LayerSpec::pointwise(2 * channels, channels);
        Ok(Self {
            gate: Conv2d::load(src, &format!("{prefix}.gate"), spec, freq, freq)?,
            channels,
        })
    }

    fn combine(target: &[f32], guide: &[f32], logits: &[f32]) -> Vec<f32> {
        target
            .iter()
            .zip(guide)
            .zip(logits)
            .map(|((&t, &g), &l)| {
                let mask = 1.0 / (1.0 + (-(l as f64)).exp());
                (t as f64 + mask * g as f64) as f32
            })
            .collect()
    }

    pub fn step(&self, target: &[f32], guide: &[f32]) -> Result<Vec<f32>> {
        let len = self.gate.f_in() * self.channels;
        if target.len() != len || guide.len() != len {
            return dim_err(format!(
                "interaction expects frames of {len} values, got {} and {}",
                target.len(),
                guide.len()
            ));
        }
        let c = self.channels;
        let joint = concat_frames(&[target, guide], &[c, c], self.gate.f_in());
        let logits = self.gate.step(&mut ConvState::new(0, joint.len()), &joint)?;
        Ok(Self::combine(target, guide, &logits))
    }

    pub fn forward(&self, target: &Tensor, guide: &Tensor) -> Result<Tensor> {
        if target.frames() != guide.frames()
            || target.freq() != guide.freq()
            || target.channels() != guide.channels()
        {
            return dim_err("interaction inputs differ in shape");
        }
        let logits = self.gate.forward(&Tensor::concat_channels(&[target, guide])?)?;
        let data = Self::combine(target.data(), guide.data(), logits.data());
        Tensor::new(target.frames(), target.freq(), target.channels(), data)
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.gate.macs_per_frame()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;
    use crate::nn::testutil::{random_tensor, RandomParams};
    use crate::nn::ParamRequest;

    struct GateBias(RandomParams, f32);

    impl ParamSource for GateBias {
        fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>> {
            if req.name.ends_with(".bias") {
                return Ok(vec![self.1; req.numel()]);
            }
            self.0.fetch(req)
        }
    }

    #[test]
    fn closed_gate_returns_target() {
        let it = Interaction::load(&mut GateBias(RandomParams::new(1), -1e4), "i", 4, 5).unwrap();
        let t = random_tensor(6, 5, 4, 2);
        let g = random_tensor(6, 5, 4, 3);
        assert_eq!(it.forward(&t, &g).unwrap(), t);
    }

    #[test]
    fn open_gate_adds_guide() {
        let it = Interaction::load(&mut GateBias(RandomParams::new(1), 1e4), "i", 4, 5).unwrap();
        let t = random_tensor(6, 5, 4, 2);
        let g = random_tensor(6, 5, 4, 3);
        let out = it.forward(&t, &g).unwrap();
        for ((o, a), b) in out.data().iter().zip(t.data()).zip(g.data()) {
            assert_eq!(*o, ((*a as f64) + (*b as f64)) as f32);
        }
    }

    #[test]
    fn zero_guide_returns_target() {
        let it = Interaction::load(&mut RandomParams::new(4), "i", 3, 5).unwrap();
        let t = random_tensor(4, 5, 3, 5);
        assert_eq!(it.forward(&t, &Tensor::zeros(4, 5, 3)).unwrap(), t);
    }

    #[test]
    fn interaction_shape_errors() {
        let it = Interaction::load(&mut RandomParams::new(4), "i", 3, 5).unwrap();
        let t = random_tensor(4, 5, 3, 5);
        assert!(it.forward(&t, &random_tensor(4, 5, 2, 0)).is_err());
        assert!(it.step(&[0.0; 15], &[0.0; 14]).is_err());
    }

    fn small_cfg() -> ArchConfig {
        ArchConfig {
            dilations: vec![1, 2, 4],
            tcm_hidden: 8,
            ..Default::default()
        }
    }

    #[test]
    fn unet_streaming_matches_offline() {
        let cfg = small_cfg();
        let freq = cfg.freq_chain(161);
        let c = 6;
        let mut src = RandomParams::new(11);
        let enc = Encoder::load(&mut src, "e", &cfg, &freq, 2, c).unwrap();
        let dec = Decoder::load(&mut src, "d", &cfg, &freq, c).unwrap();
        let tcm = Arc::new(TcmStack::load(&mut src, "t", 2, &cfg.dilations, 5 * c, 8).unwrap());
        let att = Caham::load(&mut src, "a", 2).unwrap();
        let temporal = Temporal::new(tcm, att, 5, c).unwrap();

        let x = random_tensor(40, 161, 2, 12);
        let skips = enc.forward(&x).unwrap();
        let mid = temporal.forward(skips.last().unwrap()).unwrap();
        let out = dec.forward(&mid, &skips).unwrap();
        assert_eq!((out.freq(), out.channels()), (161, c));

        let (mut es, mut ts, mut ds) = (enc.init_state(), temporal.init_state(), dec.init_state());
        for t in 0..40 {
            let s = enc.step(&mut es, x.frame(t)).unwrap();
            let m = temporal.step(&mut ts, s.last().unwrap()).unwrap();
            let y = dec.step(&mut ds, &m, &s).unwrap();
            assert_eq!(y.as_slice(), out.frame(t), "frame {t}");
        }
    }

    #[test]
    fn temporal_width_must_match() {
        let tcm = Arc::new(TcmStack::load(&mut RandomParams::new(0), "t", 2, &[1], 12, 4).unwrap());
        let att = Caham::load(&mut RandomParams::new(0), "a", 2).unwrap();
        assert!(Temporal::new(tcm, att, 5, 3).is_err());
    }
}
