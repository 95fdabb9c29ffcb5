use crate::error::{dim_err, Result};
use crate::nn::{
    ClnState, Conv2d, ConvState, CumulativeLayerNorm, LayerKind, LayerSpec, ParamSource, Prelu,
    Tensor,
};

/// Squeezed temporal convolution module.
///
/// Residual block over a `frames x 1 x width` sequence:
/// squeeze (1x1, width -> hidden) -> PReLU -> cLN -> dilated causal conv
/// (kernel 5 in time) -> PReLU -> cLN -> expand (1x1, hidden -> width) -> + input.
#[derive(Clone, Debug)]
pub struct STcm {
    spec: LayerSpec,
    squeeze: Conv2d,
    act1: Prelu,
    norm1: CumulativeLayerNorm,
    dconv: Conv2d,
    act2: Prelu,
    norm2: CumulativeLayerNorm,
    expand: Conv2d,
}

#[derive(Clone, Debug)]
pub struct StcmState {
    norm1: ClnState,
    dconv: ConvState,
    norm2: ClnState,
}

pub const STCM_KERNEL: usize = 5;

impl STcm {
    pub fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        width: usize,
        hidden: usize,
        dilation: usize,
    ) -> Result<Self> {
        let dspec = LayerSpec::conv(hidden, hidden, (STCM_KERNEL, 1), 1).with_dilation(dilation);
        Ok(Self {
            spec: LayerSpec {
                kind: LayerKind::Stcm,
                in_ch: width,
                out_ch: width,
                kernel: (STCM_KERNEL, 1),
                stride: (1, 1),
                dilation,
                norm: true,
                act: true,
            },
            squeeze: Conv2d::load(src, &format!("{prefix}.squeeze"), LayerSpec::pointwise(width, hidden), 1, 1)?,
            act1: Prelu::load(src, &format!("{prefix}.act1"), hidden)?,
            norm1: CumulativeLayerNorm::load(src, &format!("{prefix}.norm1"), hidden)?,
            dconv: Conv2d::load(src, &format!("{prefix}.dconv"), dspec, 1, 1)?,
            act2: Prelu::load(src, &format!("{prefix}.act2"), hidden)?,
            norm2: CumulativeLayerNorm::load(src, &format!("{prefix}.norm2"), hidden)?,
            expand: Conv2d::load(src, &format!("{prefix}.expand"), LayerSpec::pointwise(hidden, width), 1, 1)?,
        })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.in_ch
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if x.freq() != 1 || x.channels() != self.width() {
            return dim_err(format!(
                "S-TCM expects frames of 1x{}, got {}x{}",
                self.width(),
                x.freq(),
                x.channels()
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check(x)?;
        let mut h = self.squeeze.forward(x)?;
        self.act1.apply_in_place(h.data_mut());
        let h = self.norm1.forward(&h)?;
        let mut h = self.dconv.forward(&h)?;
        self.act2.apply_in_place(h.data_mut());
        let h = self.norm2.forward(&h)?;
        let mut y = self.expand.forward(&h)?;
        for (o, &i) in y.data_mut().iter_mut().zip(x.data()) {
            *o += i;
        }
        Ok(y)
    }

    pub fn init_state(&self) -> StcmState {
        StcmState {
            norm1: self.norm1.init_state(),
            dconv: self.dconv.init_state(),
            norm2: self.norm2.init_state(),
        }
    }

    pub fn step(&self, state: &mut StcmState, frame: &[f32]) -> Result<Vec<f32>> {
        if frame.len() != self.width() {
            return dim_err(format!(
                "S-TCM frame has {} values, expected {}",
                frame.len(),
                self.width()
            ));
        }
        let mut h = self.squeeze.step(&mut ConvState::new(0, frame.len()), frame)?;
        self.act1.apply_in_place(&mut h);
        self.norm1.step_in_place(&mut state.norm1, &mut h)?;
        let mut h = self.dconv.step(&mut state.dconv, &h)?;
        self.act2.apply_in_place(&mut h);
        self.norm2.step_in_place(&mut state.norm2, &mut h)?;
        let mut y = self.expand.step(&mut ConvState::new(0, h.len()), &h)?;
        for (o, &i) in y.iter_mut().zip(frame) {
            *o += i;
        }
        Ok(y)
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.squeeze.macs_per_frame() + self.dconv.macs_per_frame() + self.expand.macs_per_frame()
    }
}

/// Groups of S-TCMs with increasing dilation; every group's output is kept
/// for the attention fusion.
#[derive(Clone, Debug)]
pub struct TcmStack {
    groups: Vec<Vec<STcm>>,
    width: usize,
}

#[derive(Clone, Debug)]
pub struct TcmState {
    groups: Vec<Vec<StcmState>>,
}

impl TcmStack {
    pub fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        groups: usize,
        dilations: &[usize],
        width: usize,
        hidden: usize,
    ) -> Result<Self> {
        let groups = (0..groups)
            .map(|g| {
                dilations
                    .iter()
                    .enumerate()
                    .map(|(b, &d)| STcm::load(src, &format!("{prefix}.g{g}.b{b}"), width, hidden, d))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { groups, width })
    }

    pub fn groups(&self) -> usize {
        self.groups.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn blocks(&self) -> impl Iterator<Item = &STcm> {
        self.groups.iter().flatten()
    }

    /// Output of each group, in order.
    pub fn forward(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        let mut outputs = Vec::with_capacity(self.groups.len());
        let mut h = x.clone();
        for group in &self.groups {
            for block in group {
                h = block.forward(&h)?;
            }
            outputs.push(h.clone());
        }
        Ok(outputs)
    }

    pub fn init_state(&self) -> TcmState {
        TcmState {
            groups: self
                .groups
                .iter()
                .map(|g| g.iter().map(STcm::init_state).collect())
                .collect(),
        }
    }

    pub fn step(&self, state: &mut TcmState, frame: &[f32]) -> Result<Vec<Vec<f32>>> {
        let mut outputs = Vec::with_capacity(self.groups.len());
        let mut h = frame.to_vec();
        for (group, gstate) in self.groups.iter().zip(&mut state.groups) {
            for (block, bstate) in group.iter().zip(gstate.iter_mut()) {
                h = block.step(bstate, &h)?;
            }
            outputs.push(h.clone());
        }
        Ok(outputs)
    }

    pub fn macs_per_frame(&self) -> u64 {
        self.blocks().map(STcm::macs_per_frame).sum()
    }
}
