use serde::{Deserialize, Serialize};

use crate::bands::BandLayout;
use crate::error::{Error, Result};
use crate::frontend::FrontendConfig;

/// Hyperparameters of the five sub-networks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    /// Width of ME-Net and CP-Net.
    pub dslb_channels: usize,
    /// Width of MBM-Net and HBM-Net.
    pub sub_channels: usize,
    /// Encoder/decoder depth. Only 5 is supported.
    pub depth: usize,
    pub dslb_groups: usize,
    pub sub_groups: usize,
    /// S-TCM dilations within one group.
    pub dilations: Vec<usize>,
    /// Squeezed width inside each S-TCM.
    pub tcm_hidden: usize,
    /// ME-Net and CP-Net use one set of S-TCM weights.
    pub share_stcm: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            dslb_channels: 64,
            sub_channels: 48,
            depth: 5,
            dslb_groups: 4,
            sub_groups: 2,
            dilations: vec![1, 2, 4, 8, 16, 32],
            tcm_hidden: 64,
            share_stcm: true,
        }
    }
}

pub const DEPTH: usize = 5;

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth != DEPTH {
            return Err(Error::Config(format!(
                "encoder depth is fixed at {DEPTH}, got {}",
                self.depth
            )));
        }
        if self.dslb_channels == 0 || self.sub_channels == 0 || self.tcm_hidden == 0 {
            return Err(Error::Config("channel widths must be positive".into()));
        }
        if self.dslb_groups < 2 || self.sub_groups < 2 {
            return Err(Error::Config(
                "attention fusion needs at least 2 S-TCM groups".into(),
            ));
        }
        if self.dilations.is_empty()
            || !self.dilations.iter().all(|d| d.is_power_of_two())
            || !self.dilations.windows(2).all(|w| w[0] < w[1])
        {
            return Err(Error::Config(format!(
                "dilations must be strictly increasing powers of two, got {:?}",
                self.dilations
            )));
        }
        Ok(())
    }

    /// Frequency sizes along the encoder, input first: 161, 80, 40, 20, 10, 5.
    pub fn freq_chain(&self, band_bins: usize) -> Vec<usize> {
        let mut sizes = vec![band_bins];
        for _ in 0..self.depth {
            sizes.push(sizes.last().copied().unwrap_or(0) / 2);
        }
        sizes
    }

    /// `(time, frequency)` kernel of encoder layer `i`; the decoder mirrors it.
    pub fn kernel(&self, i: usize) -> (usize, usize) {
        if i == 0 {
            (2, 5)
        } else {
            (2, 3)
        }
    }
}

/// Everything needed to rebuild an engine: stored in weight-file manifests.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub frontend: FrontendConfig,
    pub arch: ArchConfig,
    pub bands: BandLayout,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.frontend.validate()?;
        self.arch.validate()?;
        self.bands.validate()?;
        if self.bands.full_bins() != self.frontend.bins() {
            return Err(Error::Config(format!(
                "band layout covers {} bins, the frontend produces {}",
                self.bands.full_bins(),
                self.frontend.bins()
            )));
        }
        let chain = self.arch.freq_chain(self.bands.band_bins());
        if chain.last().copied().unwrap_or(0) == 0 {
            return Err(Error::Config(format!(
                "{} bins per band are too few for {} halvings",
                self.bands.band_bins(),
                self.arch.depth
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_with_expected_chain() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.arch.freq_chain(161), vec![161, 80, 40, 20, 10, 5]);
    }

    #[test]
    fn rejects_bad_dilations_and_depth() {
        for dil in [vec![], vec![1, 3], vec![2, 1], vec![1, 1, 2]] {
            let cfg = ArchConfig {
                dilations: dil,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
        let cfg = ArchConfig {
            depth: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ArchConfig {
            sub_groups: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = EngineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<EngineConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_json_falls_back_to_defaults() {
        let cfg: EngineConfig = serde_json::from_str(r#"{"arch":{"dslb_channels":32}}"#).unwrap();
        assert_eq!(cfg.arch.dslb_channels, 32);
        assert_eq!(cfg.arch.sub_channels, ArchConfig::default().sub_channels);
        assert_eq!(cfg.frontend, FrontendConfig::default());
    }
}
