//! Named parameter tensors: seeded initialisation, the `.sfnw` file format
//! and parameter/MAC accounting.
//!
//! The list of tensors a configuration needs is never written down by hand.
//! Building the network against a [`Recorder`] yields every request with its
//! name, shape and initialiser, and everything here is derived from that.

mod complexity;
mod format;

pub use complexity::{complexity_report, ComplexityReport, PUBLISHED_MACS_PER_SEC, PUBLISHED_PARAMS};
pub use format::{from_bytes, load, read_from, save, to_bytes, write_to, FORMAT_VERSION, MAGIC};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WeightsError};
use crate::graph::{Backend, EngineConfig, Enhancer, SfNet};
use crate::nn::{Init, ParamRequest, ParamSource, Recorder};

/// Every parameter request made when building the network for `cfg`, in
/// construction order.
pub fn expected_params(cfg: &EngineConfig) -> Result<Vec<ParamRequest>> {
    cfg.validate()?;
    let mut rec = Recorder::default();
    SfNet::build(&cfg.arch, cfg.bands.band_bins(), &mut rec)?;
    Ok(rec.requests)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl WeightTensor {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// A complete, validated parameter set for one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    config: EngineConfig,
    tensors: BTreeMap<String, WeightTensor>,
}

impl WeightSet {
    /// Check `tensors` against what `config` requires: exact names and shapes,
    /// no extras, finite values.
    pub fn new(config: EngineConfig, tensors: BTreeMap<String, WeightTensor>) -> Result<Self> {
        let expected = expected_params(&config)?;
        for (name, t) in &tensors {
            if t.data.len() != t.numel() {
                return Err(WeightsError::Manifest(format!(
                    "tensor {name} holds {} values for shape {:?}",
                    t.data.len(),
                    t.shape
                ))
                .into());
            }
        }
        let mut wanted = BTreeSet::new();
        for req in &expected {
            let Some(t) = tensors.get(&req.name) else {
                return Err(WeightsError::MissingTensor(req.name.clone()).into());
            };
            if t.shape != req.shape {
                return Err(WeightsError::ShapeMismatch {
                    name: req.name.clone(),
                    expected: req.shape.clone(),
                    found: t.shape.clone(),
                }
                .into());
            }
            wanted.insert(req.name.as_str());
        }
        if let Some(orphan) = tensors.keys().find(|k| !wanted.contains(k.as_str())) {
            return Err(WeightsError::OrphanTensor(orphan.clone()).into());
        }
        if let Some((name, _)) = tensors
            .iter()
            .find(|(_, t)| t.data.iter().any(|v| !v.is_finite()))
        {
            return Err(WeightsError::NonFinite(name.clone()).into());
        }
        Ok(Self { config, tensors })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn tensors(&self) -> &BTreeMap<String, WeightTensor> {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&WeightTensor> {
        self.tensors.get(name)
    }

    /// Values of one tensor, for in-place edits. Shapes cannot change.
    pub fn values_mut(&mut self, name: &str) -> Option<&mut [f32]> {
        self.tensors.get_mut(name).map(|t| t.data.as_mut_slice())
    }

    pub fn params_total(&self) -> usize {
        self.tensors.values().map(WeightTensor::numel).sum()
    }

    pub fn build_net(&self) -> Result<SfNet> {
        let cfg = &self.config;
        SfNet::build(&cfg.arch, cfg.bands.band_bins(), &mut Lookup(self))
    }

    pub fn enhancer(&self) -> Result<Enhancer> {
        Enhancer::new(
            self.config.clone(),
            Backend::Network(Arc::new(self.build_net()?)),
        )
    }
}

/// Serves tensors of a validated set by name.
struct Lookup<'a>(&'a WeightSet);

impl ParamSource for Lookup<'_> {
    fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>> {
        match self.0.tensors.get(&req.name) {
            Some(t) if t.shape == req.shape => Ok(t.data.clone()),
            Some(t) => Err(WeightsError::ShapeMismatch {
                name: req.name,
                expected: req.shape,
                found: t.shape.clone(),
            }
            .into()),
            None => Err(WeightsError::MissingTensor(req.name).into()),
        }
    }
}

/// Draws fresh values for each request from one seeded stream.
struct Seeded(ChaCha8Rng);

impl ParamSource for Seeded {
    fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>> {
        let n = req.numel();
        Ok(match req.init {
            Init::FanInUniform { fan_in } => {
                let bound = 1.0 / (fan_in as f64).sqrt();
                (0..n)
                    .map(|_| self.0.gen_range(-bound..bound) as f32)
                    .collect()
            }
            Init::Zeros => vec![0.0; n],
            Init::Const(c) => vec![c; n],
        })
    }
}

/// Deterministic random weights: fan-in-scaled uniform kernels, zero biases,
/// PReLU slopes 0.25, cLN gain 1 and bias 0.
pub fn init_weights(cfg: &EngineConfig, seed: u64) -> Result<WeightSet> {
    let mut src = Seeded(ChaCha8Rng::seed_from_u64(seed));
    let tensors = expected_params(cfg)?
        .into_iter()
        .map(|req| {
            let shape = req.shape.clone();
            let name = req.name.clone();
            src.fetch(req).map(|data| (name, WeightTensor { shape, data }))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    WeightSet::new(cfg.clone(), tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn small() -> EngineConfig {
        let mut cfg = EngineConfig::default();
        cfg.arch.dslb_channels = 8;
        cfg.arch.sub_channels = 6;
        cfg.arch.tcm_hidden = 4;
        cfg.arch.dilations = vec![1, 2];
        cfg
    }

    #[test]
    fn same_seed_is_bit_identical() {
        assert_eq!(init_weights(&small(), 7).unwrap(), init_weights(&small(), 7).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(init_weights(&small(), 7).unwrap(), init_weights(&small(), 8).unwrap());
    }

    #[test]
    fn values_follow_their_initialiser() {
        let cfg = small();
        let ws = init_weights(&cfg, 1).unwrap();
        for req in expected_params(&cfg).unwrap() {
            let t = ws.get(&req.name).unwrap();
            assert!(t.data.iter().all(|v| v.is_finite()));
            match req.init {
                Init::FanInUniform { fan_in } => {
                    let b = 1.0 / (fan_in as f32).sqrt();
                    assert!(t.data.iter().all(|v| v.abs() <= b), "{}", req.name);
                }
                Init::Zeros => assert!(t.data.iter().all(|&v| v == 0.0)),
                Init::Const(c) => assert!(t.data.iter().all(|&v| v == c)),
            }
        }
        assert!(ws.get("mbm.enc.0.act.slope").unwrap().data.iter().all(|&v| v == 0.25));
        assert!(ws.get("hbm.dec.4.norm.gain").unwrap().data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn names_are_unique() {
        let reqs = expected_params(&EngineConfig::default()).unwrap();
        let names: BTreeSet<_> = reqs.iter().map(|r| &r.name).collect();
        assert_eq!(names.len(), reqs.len());
    }

    #[test]
    fn validation_errors() {
        let cfg = small();
        let ws = init_weights(&cfg, 1).unwrap();

        let mut t = ws.tensors().clone();
        t.remove("dslb.me.mask.tanh.bias");
        assert!(matches!(
            WeightSet::new(cfg.clone(), t),
            Err(Error::Weights(WeightsError::MissingTensor(n))) if n == "dslb.me.mask.tanh.bias"
        ));

        let mut t = ws.tensors().clone();
        t.insert("extra".into(), WeightTensor { shape: vec![1], data: vec![0.0] });
        assert!(matches!(
            WeightSet::new(cfg.clone(), t),
            Err(Error::Weights(WeightsError::OrphanTensor(n))) if n == "extra"
        ));

        let mut t = ws.tensors().clone();
        t.get_mut("mbm.inter.gate.bias").unwrap().data[0] = f32::NAN;
        assert!(matches!(
            WeightSet::new(cfg.clone(), t),
            Err(Error::Weights(WeightsError::NonFinite(_)))
        ));

        let mut t = ws.tensors().clone();
        t.insert(
            "mbm.inter.gate.bias".into(),
            WeightTensor { shape: vec![7], data: vec![0.0; 7] },
        );
        assert!(matches!(
            WeightSet::new(cfg, t),
            Err(Error::Weights(WeightsError::ShapeMismatch { name, .. })) if name == "mbm.inter.gate.bias"
        ));
    }

    #[test]
    fn shared_stcm_feeds_both_low_band_nets() {
        let cfg = small();
        let mut ws = init_weights(&cfg, 2).unwrap();
        // non-zero biases so that the perturbation has something to propagate
        for (name, t) in ws.tensors.iter_mut() {
            if name.ends_with(".bias") {
                t.data.iter_mut().for_each(|v| *v = 0.05);
            }
        }
        let net = ws.build_net().unwrap();
        let mag = crate::bands::RealGrid::new(
            3,
            161,
            (0..3 * 161).map(|i| ((i % 17) as f64) * 0.1).collect(),
        )
        .unwrap();
        let lb = crate::frontend::Spectrogram::new(
            3,
            161,
            mag.data.iter().map(|&m| num_complex::Complex64::new(m, -m * 0.5)).collect(),
            50.0,
            true,
        )
        .unwrap();
        let me0 = net.me().forward(&mag).unwrap();
        let cp0 = net.cp().forward(&lb).unwrap();

        ws.values_mut("dslb.tcm.g0.b0.expand.kernel")
            .unwrap()
            .iter_mut()
            .for_each(|v| *v += 0.3);
        let net = ws.build_net().unwrap();
        assert_ne!(net.me().forward(&mag).unwrap(), me0);
        assert_ne!(net.cp().forward(&lb).unwrap(), cp0);
    }
}
