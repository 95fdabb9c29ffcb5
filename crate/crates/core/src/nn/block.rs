use crate::error::Result;
use crate::nn::{
    ClnState, Conv2d, ConvState, CumulativeLayerNorm, Init, LayerSpec, ParamRequest, ParamSource,
    Prelu, Tensor,
};

impl Conv2d {
    /// Fetch `{prefix}.kernel` and `{prefix}.bias` and build the layer.
    pub fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        spec: LayerSpec,
        f_in: usize,
        f_out: usize,
    ) -> Result<Self> {
        let fan_in = spec.in_ch * spec.kernel.0 * spec.kernel.1;
        let kernel = src.fetch(ParamRequest::new(
            format!("{prefix}.kernel"),
            Conv2d::kernel_shape(&spec),
            Init::FanInUniform { fan_in },
        ))?;
        let bias = src.fetch(ParamRequest::new(
            format!("{prefix}.bias"),
            vec![spec.out_ch],
            Init::Zeros,
        ))?;
        Conv2d::new(spec, f_in, f_out, &kernel, &bias)
    }
}

impl CumulativeLayerNorm {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize) -> Result<Self> {
        let gain = src.fetch(ParamRequest::new(
            format!("{prefix}.gain"),
            vec![channels],
            Init::Const(1.0),
        ))?;
        let bias = src.fetch(ParamRequest::new(
            format!("{prefix}.bias"),
            vec![channels],
            Init::Zeros,
        ))?;
        CumulativeLayerNorm::new(&gain, &bias)
    }
}

impl Prelu {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize) -> Result<Self> {
        let slope = src.fetch(ParamRequest::new(
            format!("{prefix}.slope"),
            vec![channels],
            Init::Const(Prelu::DEFAULT_SLOPE),
        ))?;
        Prelu::new(&slope)
    }
}

/// conv -> cLN -> PReLU
#[derive(Clone, Debug)]
pub struct ConvBlock {
    conv: Conv2d,
    norm: CumulativeLayerNorm,
    act: Prelu,
}

#[derive(Clone, Debug)]
pub struct BlockState {
    conv: ConvState,
    norm: ClnState,
}

impl ConvBlock {
    pub fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        spec: LayerSpec,
        f_in: usize,
        f_out: usize,
    ) -> Result<Self> {
        Ok(Self {
            conv: Conv2d::load(src, &format!("{prefix}.conv"), spec, f_in, f_out)?,
            norm: CumulativeLayerNorm::load(src, &format!("{prefix}.norm"), spec.out_ch)?,
            act: Prelu::load(src, &format!("{prefix}.act"), spec.out_ch)?,
        })
    }

    pub fn conv(&self) -> &Conv2d {
        &self.conv
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = self.conv.forward(x)?;
        let mut y = self.norm.forward(&y)?;
        self.act.apply_in_place(y.data_mut());
        Ok(y)
    }

    pub fn init_state(&self) -> BlockState {
        BlockState {
            conv: self.conv.init_state(),
            norm: self.norm.init_state(),
        }
    }

    pub fn step(&self, state: &mut BlockState, frame: &[f32]) -> Result<Vec<f32>> {
        let mut y = self.conv.step(&mut state.conv, frame)?;
        self.norm.step_in_place(&mut state.norm, &mut y)?;
        self.act.apply_in_place(&mut y);
        Ok(y)
    }
}
