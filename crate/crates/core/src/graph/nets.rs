use std::sync::Arc;

use num_complex::Complex64;

use crate::bands::RealGrid;
use crate::error::{dim_err, Result};
use crate::frontend::Spectrogram;
use crate::graph::unet::{Decoder, Encoder, Interaction, Temporal};
use crate::graph::ArchConfig;
use crate::nn::{
    BlockState, Caham, Conv2d, ConvState, LayerSpec, MaskHead, ParamSource,
    TcmStack, TcmState, Tensor,
};

fn grid_to_tensor(grids: &[&RealGrid]) -> Result<Tensor> {
    let first = grids[0];
    if grids.iter().any(|g| !g.same_shape(first)) {
        return dim_err("input grids differ in shape");
    }
    let n = grids.len();
    let mut data = Vec::with_capacity(first.data.len() * n);
    for i in 0..first.data.len() {
        data.extend(grids.iter().map(|g| g.data[i] as f32));
    }
    Tensor::new(first.frames, first.bins, n, data)
}

fn frame_to_f32(grids: &[&[f64]]) -> Vec<f32> {
    let n = grids.len();
    let len = grids[0].len();
    let mut out = Vec::with_capacity(len * n);
    for i in 0..len {
        out.extend(grids.iter().map(|g| g[i] as f32));
    }
    out
}

fn check_bins(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return dim_err(format!("{what} expects {want} bins, got {got}"));
    }
    Ok(())
}

fn tcm_for(
    src: &mut dyn ParamSource,
    prefix: &str,
    cfg: &ArchConfig,
    groups: usize,
    width: usize,
) -> Result<Arc<TcmStack>> {
    Ok(Arc::new(TcmStack::load(
        src,
        prefix,
        groups,
        &cfg.dilations,
        width,
        cfg.tcm_hidden,
    )?))
}

/// Magnitude-gain branch of the low band.
#[derive(Clone, Debug)]
pub struct MeNet {
    enc: Encoder,
    temporal: Temporal,
    dec: Decoder,
    mask: MaskHead,
    bins: usize,
}

#[derive(Clone, Debug)]
pub struct MeState {
    enc: Vec<BlockState>,
    tcm: TcmState,
    dec: Vec<BlockState>,
}

impl MeNet {
    pub(crate) fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        cfg: &ArchConfig,
        freq: &[usize],
        tcm: Arc<TcmStack>,
    ) -> Result<Self> {
        let c = cfg.dslb_channels;
        let bottom = freq[cfg.depth];
        Ok(Self {
            enc: Encoder::load(src, &format!("{prefix}.enc"), cfg, freq, 1, c)?,
            temporal: Temporal::new(tcm, Caham::load(src, &format!("{prefix}.att"), cfg.dslb_groups)?, bottom, c)?,
            dec: Decoder::load(src, &format!("{prefix}.dec"), cfg, freq, c)?,
            mask: MaskHead::load(src, &format!("{prefix}.mask"), c, freq[0])?,
            bins: freq[0],
        })
    }

    /// Gain in `(-1, 1)` for a compressed low-band magnitude.
    pub fn forward(&self, mag: &RealGrid) -> Result<RealGrid> {
        check_bins("ME-Net", mag.bins, self.bins)?;
        let x = grid_to_tensor(&[mag])?;
        let skips = self.enc.forward(&x)?;
        let mid = self.temporal.forward(&skips[skips.len() - 1])?;
        self.mask.forward(&self.dec.forward(&mid, &skips)?)
    }

    pub fn init_state(&self) -> MeState {
        MeState {
            enc: self.enc.init_state(),
            tcm: self.temporal.init_state(),
            dec: self.dec.init_state(),
        }
    }

    pub fn step(&self, st: &mut MeState, mag: &[f64]) -> Result<Vec<f64>> {
        check_bins("ME-Net", mag.len(), self.bins)?;
        let skips = self.enc.step(&mut st.enc, &frame_to_f32(&[mag]))?;
        let mid = self.temporal.step(&mut st.tcm, &skips[skips.len() - 1])?;
        self.mask.step(&self.dec.step(&mut st.dec, &mid, &skips)?)
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.enc.macs_per_frame()
            + self.temporal.macs_per_frame()
            + self.dec.macs_per_frame()
            + self.mask.macs_per_frame()
    }
}

/// Complex residual branch of the low band: two decoders with linear heads
/// for the real and imaginary parts.
#[derive(Clone, Debug)]
pub struct CpNet {
    enc: Encoder,
    temporal: Temporal,
    dec_r: Decoder,
    dec_i: Decoder,
    head_r: Conv2d,
    head_i: Conv2d,
    bins: usize,
}

#[derive(Clone, Debug)]
pub struct CpState {
    enc: Vec<BlockState>,
    tcm: TcmState,
    dec_r: Vec<BlockState>,
    dec_i: Vec<BlockState>,
}

impl CpNet {
    pub(crate) fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        cfg: &ArchConfig,
        freq: &[usize],
        tcm: Arc<TcmStack>,
    ) -> Result<Self> {
        let c = cfg.dslb_channels;
        let bottom = freq[cfg.depth];
        let head = LayerSpec::pointwise(c, 1);
        Ok(Self {
            enc: Encoder::load(src, &format!("{prefix}.enc"), cfg, freq, 2, c)?,
            temporal: Temporal::new(tcm, Caham::load(src, &format!("{prefix}.att"), cfg.dslb_groups)?, bottom, c)?,
            dec_r: Decoder::load(src, &format!("{prefix}.dec_r"), cfg, freq, c)?,
            dec_i: Decoder::load(src, &format!("{prefix}.dec_i"), cfg, freq, c)?,
            head_r: Conv2d::load(src, &format!("{prefix}.head_r"), head, freq[0], freq[0])?,
            head_i: Conv2d::load(src, &format!("{prefix}.head_i"), head, freq[0], freq[0])?,
            bins: freq[0],
        })
    }

    fn ri_frame(frame: &[Complex64]) -> Vec<f32> {
        frame
            .iter()
            .flat_map(|z| [z.re as f32, z.im as f32])
            .collect()
    }

    fn to_complex(re: &[f32], im: &[f32]) -> Vec<Complex64> {
        re.iter()
            .zip(im)
            .map(|(&r, &i)| Complex64::new(r as f64, i as f64))
            .collect()
    }

    /// Residual real/imaginary components for a compressed low band.
    pub fn forward(&self, lb: &Spectrogram) -> Result<Spectrogram> {
        check_bins("CP-Net", lb.bins(), self.bins)?;
        let data: Vec<f32> = (0..lb.frames()).flat_map(|t| Self::ri_frame(lb.frame(t))).collect();
        let x = Tensor::new(lb.frames(), lb.bins(), 2, data)?;
        let skips = self.enc.forward(&x)?;
        let mid = self.temporal.forward(&skips[skips.len() - 1])?;
        let re = self.head_r.forward(&self.dec_r.forward(&mid, &skips)?)?;
        let im = self.head_i.forward(&self.dec_i.forward(&mid, &skips)?)?;
        Spectrogram::new(
            lb.frames(),
            lb.bins(),
            Self::to_complex(re.data(), im.data()),
            lb.bin_hz(),
            lb.is_compressed(),
        )
    }

    pub fn init_state(&self) -> CpState {
        CpState {
            enc: self.enc.init_state(),
            tcm: self.temporal.init_state(),
            dec_r: self.dec_r.init_state(),
            dec_i: self.dec_i.init_state(),
        }
    }

    pub fn step(&self, st: &mut CpState, lb: &[Complex64]) -> Result<Vec<Complex64>> {
        check_bins("CP-Net", lb.len(), self.bins)?;
        let skips = self.enc.step(&mut st.enc, &Self::ri_frame(lb))?;
        let mid = self.temporal.step(&mut st.tcm, &skips[skips.len() - 1])?;
        let dr = self.dec_r.step(&mut st.dec_r, &mid, &skips)?;
        let di = self.dec_i.step(&mut st.dec_i, &mid, &skips)?;
        let re = self.head_r.step(&mut ConvState::new(0, dr.len()), &dr)?;
        let im = self.head_i.step(&mut ConvState::new(0, di.len()), &di)?;
        Ok(Self::to_complex(&re, &im))
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.enc.macs_per_frame()
            + self.temporal.macs_per_frame()
            + self.dec_r.macs_per_frame()
            + self.dec_i.macs_per_frame()
            + self.head_r.macs_per_frame()
            + self.head_i.macs_per_frame()
    }
}

/// Light-weight magnitude masker for the middle or high band, guided by the
/// estimated magnitudes of the lower bands.
#[derive(Clone, Debug)]
pub struct SubBandNet {
    enc: Encoder,
    guide: Encoder,
    inter: Interaction,
    temporal: Temporal,
    dec: Decoder,
    mask: MaskHead,
    bins: usize,
    guides: usize,
}

#[derive(Clone, Debug)]
pub struct SubBandState {
    enc: Vec<BlockState>,
    guide: Vec<BlockState>,
    tcm: TcmState,
    dec: Vec<BlockState>,
}

impl SubBandNet {
    pub(crate) fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        cfg: &ArchConfig,
        freq: &[usize],
        guides: usize,
    ) -> Result<Self> {
        let c = cfg.sub_channels;
        let bottom = freq[cfg.depth];
        let enc = Encoder::load(src, &format!("{prefix}.enc"), cfg, freq, 1, c)?;
        let guide = Encoder::load(src, &format!("{prefix}.guide"), cfg, freq, guides, c)?;
        let inter = Interaction::load(src, &format!("{prefix}.inter"), c, bottom)?;
        let tcm = tcm_for(src, &format!("{prefix}.tcm"), cfg, cfg.sub_groups, bottom * c)?;
        let att = Caham::load(src, &format!("{prefix}.att"), cfg.sub_groups)?;
        Ok(Self {
            enc,
            guide,
            inter,
            temporal: Temporal::new(tcm, att, bottom, c)?,
            dec: Decoder::load(src, &format!("{prefix}.dec"), cfg, freq, c)?,
            mask: MaskHead::load(src, &format!("{prefix}.mask"), c, freq[0])?,
            bins: freq[0],
            guides,
        })
    }

    pub fn guides(&self) -> usize {
        self.guides
    }

    fn check_guides(&self, n: usize) -> Result<()> {
        if n != self.guides {
            return dim_err(format!("expected {} guide bands, got {n}", self.guides));
        }
        Ok(())
    }

    /// Gain for a compressed band magnitude given the estimated magnitudes of
    /// the lower bands.
    pub fn forward(&self, mag: &RealGrid, guides: &[&RealGrid]) -> Result<RealGrid> {
        check_bins("sub-band net", mag.bins, self.bins)?;
        self.check_guides(guides.len())?;
        if guides.iter().any(|g| !g.same_shape(mag)) {
            return dim_err("guide and target magnitudes differ in shape");
        }
        let skips = self.enc.forward(&grid_to_tensor(&[mag])?)?;
        let g = self.guide.forward(&grid_to_tensor(guides)?)?;
        let depth = skips.len() - 1;
        let joint = self.inter.forward(&skips[depth], &g[depth])?;
        let mid = self.temporal.forward(&joint)?;
        self.mask.forward(&self.dec.forward(&mid, &skips)?)
    }

    pub fn init_state(&self) -> SubBandState {
        SubBandState {
            enc: self.enc.init_state(),
            guide: self.guide.init_state(),
            tcm: self.temporal.init_state(),
            dec: self.dec.init_state(),
        }
    }

    pub fn step(&self, st: &mut SubBandState, mag: &[f64], guides: &[&[f64]]) -> Result<Vec<f64>> {
        check_bins("sub-band net", mag.len(), self.bins)?;
        self.check_guides(guides.len())?;
        if guides.iter().any(|g| g.len() != mag.len()) {
            return dim_err("guide and target magnitudes differ in shape");
        }
        let skips = self.enc.step(&mut st.enc, &frame_to_f32(&[mag]))?;
        let g = self.guide.step(&mut st.guide, &frame_to_f32(guides))?;
        let depth = skips.len() - 1;
        let joint = self.inter.step(&skips[depth], &g[depth])?;
        let mid = self.temporal.step(&mut st.tcm, &joint)?;
        self.mask.step(&self.dec.step(&mut st.dec, &mid, &skips)?)
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.enc.macs_per_frame()
            + self.guide.macs_per_frame()
            + self.inter.macs_per_frame()
            + self.temporal.macs_per_frame()
            + self.dec.macs_per_frame()
            + self.mask.macs_per_frame()
    }
}

/// The five sub-networks with their weights.
#[derive(Clone, Debug)]
pub struct SfNet {
    me: MeNet,
    cp: CpNet,
    mbm: SubBandNet,
    hbm: SubBandNet,
}

#[derive(Clone, Debug)]
pub struct SfNetState {
    pub(crate) me: MeState,
    pub(crate) cp: CpState,
    pub(crate) mbm: SubBandState,
    pub(crate) hbm: SubBandState,
}

impl SfNet {
    /// Build every layer, pulling parameters from `src` under names such as
    /// `dslb.me.enc.0.conv.kernel`.
    pub fn build(cfg: &ArchConfig, band_bins: usize, src: &mut dyn ParamSource) -> Result<Self> {
        cfg.validate()?;
        let freq = cfg.freq_chain(band_bins);
        let width = freq[cfg.depth] * cfg.dslb_channels;
        let (me_tcm, cp_tcm) = if cfg.share_stcm {
            let shared = tcm_for(src, "dslb.tcm", cfg, cfg.dslb_groups, width)?;
            (shared.clone(), shared)
        } else {
            (
                tcm_for(src, "dslb.me.tcm", cfg, cfg.dslb_groups, width)?,
                tcm_for(src, "dslb.cp.tcm", cfg, cfg.dslb_groups, width)?,
            )
        };
        Ok(Self {
            me: MeNet::load(src, "dslb.me", cfg, &freq, me_tcm)?,
            cp: CpNet::load(src, "dslb.cp", cfg, &freq, cp_tcm)?,
            mbm: SubBandNet::load(src, "mbm", cfg, &freq, 1)?,
            hbm: SubBandNet::load(src, "hbm", cfg, &freq, 2)?,
        })
    }

    pub fn me(&self) -> &MeNet {
        &self.me
    }

    pub fn cp(&self) -> &CpNet {
        &self.cp
    }

    pub fn mbm(&self) -> &SubBandNet {
        &self.mbm
    }

    pub fn hbm(&self) -> &SubBandNet {
        &self.hbm
    }

    pub fn init_state(&self) -> SfNetState {
        SfNetState {
            me: self.me.init_state(),
            cp: self.cp.init_state(),
            mbm: self.mbm.init_state(),
            hbm: self.hbm.init_state(),
        }
    }

    /// `(name, MACs per frame)` for each sub-network.
    pub fn macs_per_frame(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("me", self.me.macs_per_frame()),
            ("cp", self.cp.macs_per_frame()),
            ("mbm", self.mbm.macs_per_frame()),
            ("hbm", self.hbm.macs_per_frame()),
        ]
    }
}
