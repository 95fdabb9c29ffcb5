use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::{Init, ParamRequest, ParamSource, Tensor};

pub(crate) fn random_vec(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub(crate) fn random_tensor(frames: usize, freq: usize, channels: usize, seed: u64) -> Tensor {
    Tensor::new(frames, freq, channels, random_vec(frames * freq * channels, seed)).unwrap()
}

/// Random fan-in-scaled kernels, default values for everything else.
pub(crate) struct RandomParams(pub ChaCha8Rng);

impl RandomParams {
    pub(crate) fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl ParamSource for RandomParams {
    fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>> {
        let n = req.numel();
        Ok(match req.init {
            Init::FanInUniform { fan_in } => {
                let b = 1.0 / (fan_in as f32).sqrt();
                (0..n).map(|_| self.0.gen_range(-b..b)).collect()
            }
            Init::Zeros => vec![0.0; n],
            Init::Const(c) => vec![c; n],
        })
    }
}

/// Zero for every parameter regardless of its init hint.
pub(crate) struct ZeroParams;

impl ParamSource for ZeroParams {
    fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>> {
        Ok(vec![0.0; req.numel()])
    }
}
