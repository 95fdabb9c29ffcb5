use std::collections::VecDeque;

use crate::error::{dim_err, Error, Result};
use crate::nn::{LayerKind, LayerSpec, Tensor};

/// `a * b + c`, fused where the target has FMA.
#[inline(always)]
fn madd(a: f32, b: f32, c: f32) -> f32 {
    if cfg!(target_feature = "fma") {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

/// Past input frames of a time-causal layer.
///
/// Holds exactly `(k_t - 1) * dilation` frames, oldest first, zero-filled at
/// the start of a stream.
#[derive(Clone, Debug)]
pub struct ConvState {
    history: VecDeque<Vec<f32>>,
    frame_len: usize,
}

impl ConvState {
    pub(crate) fn new(depth: usize, frame_len: usize) -> Self {
        Self {
            history: (0..depth).map(|_| vec![0.0; frame_len]).collect(),
            frame_len,
        }
    }

    pub fn depth(&self) -> usize {
        self.history.len()
    }
}

/// Time-causal 2-D convolution or frequency-upsampling transposed convolution.
///
/// Time taps reach frames `t - (k_t - 1 - j) * d` for `j` in `0..k_t`.
/// Frequency taps use `(k_f - 1) / 2` bins of low-side padding; the
/// transposed variant is the exact adjoint geometry, so surplus bins at the
/// top edge are cropped.
#[derive(Clone, Debug)]
pub struct Conv2d {
    spec: LayerSpec,
    f_in: usize,
    f_out: usize,
    /// `(input bin, frequency tap)` pairs contributing to each output bin.
    taps: Vec<Vec<(usize, usize)>>,
    /// `[k_t][k_f][in][out]`
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Conv2d {
    /// Shape of the kernel tensor as stored in weight files:
    /// `[out, in, k_t, k_f]` for convolutions, `[in, out, k_t, k_f]` for
    /// transposed convolutions.
    pub fn kernel_shape(spec: &LayerSpec) -> Vec<usize> {
        let (kt, kf) = spec.kernel;
        match spec.kind {
            LayerKind::Deconv => vec![spec.in_ch, spec.out_ch, kt, kf],
            _ => vec![spec.out_ch, spec.in_ch, kt, kf],
        }
    }

    pub fn new(spec: LayerSpec, f_in: usize, f_out: usize, kernel: &[f32], bias: &[f32]) -> Result<Self> {
        spec.validate()?;
        let (kt_n, kf_n) = spec.kernel;
        let (ci, co) = (spec.in_ch, spec.out_ch);
        if kernel.len() != co * ci * kt_n * kf_n {
            return dim_err(format!(
                "kernel has {} values, expected {:?}",
                kernel.len(),
                Self::kernel_shape(&spec)
            ));
        }
        if bias.len() != co {
            return dim_err(format!("bias has {} values, expected {co}", bias.len()));
        }
        let transposed = match spec.kind {
            LayerKind::Conv => false,
            LayerKind::Deconv => true,
            other => {
                return Err(Error::Config(format!("{other:?} is not a convolution")));
            }
        };
        let stride = spec.stride.1;
        let pad = (kf_n - 1) / 2;
        let taps: Vec<Vec<(usize, usize)>> = (0..f_out)
            .map(|fo| {
                (0..kf_n)
                    .filter_map(|kf| {
                        if transposed {
                            let pos = (fo + pad).checked_sub(kf)?;
                            (pos % stride == 0 && pos / stride < f_in).then_some((pos / stride, kf))
                        } else {
                            let fi = (fo * stride + kf).checked_sub(pad)?;
                            (fi < f_in).then_some((fi, kf))
                        }
                    })
                    .collect()
            })
            .collect();

        let mut weight = vec![0.0; kernel.len()];
        for o in 0..co {
            for i in 0..ci {
                for kt in 0..kt_n {
                    for kf in 0..kf_n {
                        let src = if transposed {
                            ((i * co + o) * kt_n + kt) * kf_n + kf
                        } else {
                            ((o * ci + i) * kt_n + kt) * kf_n + kf
                        };
                        weight[((kt * kf_n + kf) * ci + i) * co + o] = kernel[src];
                    }
                }
            }
        }
        Ok(Self {
            spec,
            f_in,
            f_out,
            taps,
            weight,
            bias: bias.to_vec(),
        })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn f_in(&self) -> usize {
        self.f_in
    }

    pub fn f_out(&self) -> usize {
        self.f_out
    }

    fn history_depth(&self) -> usize {
        (self.spec.kernel.0 - 1) * self.spec.dilation
    }

    fn in_frame_len(&self) -> usize {
        self.f_in * self.spec.in_ch
    }

    pub fn out_frame_len(&self) -> usize {
        self.f_out * self.spec.out_ch
    }

    /// One output frame from the `k_t` input frames it depends on, oldest first.
    fn frame_kernel(&self, inputs: &[&[f32]], out: &mut [f32]) {
        let (_, kf_n) = self.spec.kernel;
        let (ci, co) = (self.spec.in_ch, self.spec.out_ch);
        let mat = ci * co;
        for (fo, taps) in self.taps.iter().enumerate() {
            let y = &mut out[fo * co..(fo + 1) * co];
            y.copy_from_slice(&self.bias);
            for (kt, x) in inputs.iter().enumerate() {
                for &(fi, kf) in taps {
                    let w = &self.weight[(kt * kf_n + kf) * mat..][..mat];
                    let xv = &x[fi * ci..(fi + 1) * ci];
                    for (&xi, wrow) in xv.iter().zip(w.chunks_exact(co)) {
                        for (yo, &wo) in y.iter_mut().zip(wrow) {
                            *yo = madd(xi, wo, *yo);
                        }
                    }
                }
            }
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.channels() != self.spec.in_ch || x.freq() != self.f_in {
            return dim_err(format!(
                "layer expects {}x{} input frames, got {}x{}",
                self.f_in,
                self.spec.in_ch,
                x.freq(),
                x.channels()
            ));
        }
        Ok(())
    }

    /// Whole-sequence pass with zero frames before `t = 0`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let kt_n = self.spec.kernel.0;
        let d = self.spec.dilation;
        let zero = vec![0.0; self.in_frame_len()];
        let n_out = self.out_frame_len();
        let mut out = vec![0.0; x.frames() * n_out];
        let mut inputs: Vec<&[f32]> = Vec::with_capacity(kt_n);
        for t in 0..x.frames() {
            inputs.clear();
            for j in 0..kt_n {
                let back = (kt_n - 1 - j) * d;
                inputs.push(match t.checked_sub(back) {
                    Some(src) => x.frame(src),
                    None => &zero,
                });
            }
            self.frame_kernel(&inputs, &mut out[t * n_out..(t + 1) * n_out]);
        }
        Ok(Tensor::from_raw(x.frames(), self.f_out, self.spec.out_ch, out))
    }

    pub fn init_state(&self) -> ConvState {
        ConvState::new(self.history_depth(), self.in_frame_len())
    }

    /// Consume one input frame and emit one output frame.
    pub fn step(&self, state: &mut ConvState, frame: &[f32]) -> Result<Vec<f32>> {
        if frame.len() != self.in_frame_len() {
            return dim_err(format!(
                "frame has {} values, layer expects {}",
                frame.len(),
                self.in_frame_len()
            ));
        }
        let depth = self.history_depth();
        if state.history.len() != depth || state.frame_len != frame.len() {
            return Err(Error::State(format!(
                "conv state holds {} frames of {}, layer needs {depth} of {}",
                state.history.len(),
                state.frame_len,
                frame.len()
            )));
        }
        let kt_n = self.spec.kernel.0;
        let d = self.spec.dilation;
        let mut inputs: Vec<&[f32]> = Vec::with_capacity(kt_n);
        for j in 0..kt_n {
            let back = (kt_n - 1 - j) * d;
            inputs.push(if back == 0 {
                frame
            } else {
                &state.history[depth - back]
            });
        }
        let mut out = vec![0.0; self.out_frame_len()];
        self.frame_kernel(&inputs, &mut out);
        if depth > 0 {
            let mut recycled = state.history.pop_front().expect("depth > 0");
            recycled.copy_from_slice(frame);
            state.history.push_back(recycled);
        }
        Ok(out)
    }

    /// Multiply-accumulates per frame.
    pub fn macs_per_frame(&self) -> u64 {
        let (kt, kf) = self.spec.kernel;
        let per_tap = (kt * self.spec.in_ch * self.spec.out_ch) as u64;
        match self.spec.kind {
            LayerKind::Deconv => self.f_in as u64 * kf as u64 * per_tap,
            _ => self.f_out as u64 * kf as u64 * per_tap,
        }
    }
}
