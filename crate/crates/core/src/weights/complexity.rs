use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{EngineConfig, SfNet};
use crate::nn::{ParamRequest, Recorder};

/// Published totals for the full model.
pub const PUBLISHED_PARAMS: f64 = 6.98e6;
pub const PUBLISHED_MACS_PER_SEC: f64 = 5.62e9;

/// Parameter and compute totals derived from layer shapes alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub params_total: u64,
    /// `me`, `cp`, `stcm_shared` (when shared), `mbm`, `hbm`.
    pub params_per_subnet: BTreeMap<String, u64>,
    /// Per frame; the shared S-TCM is counted in both `me` and `cp`.
    pub macs_per_frame: BTreeMap<String, u64>,
    pub frames_per_second: f64,
    pub macs_per_second: f64,
}

impl ComplexityReport {
    /// Relative deviation of the parameter total from the published figure.
    pub fn params_deviation(&self) -> f64 {
        self.params_total as f64 / PUBLISHED_PARAMS - 1.0
    }

    pub fn macs_deviation(&self) -> f64 {
        self.macs_per_second / PUBLISHED_MACS_PER_SEC - 1.0
    }

    /// One-line comparison against the published totals.
    pub fn published_line(&self) -> String {
        format!(
            "this build: {:.2} M params / {:.2} G MACs/s; paper: 6.98 M / 5.62 G MACs; deviation {:+.1}% params, {:+.1}% MACs",
            self.params_total as f64 / 1e6,
            self.macs_per_second / 1e9,
            100.0 * self.params_deviation(),
            100.0 * self.macs_deviation()
        )
    }
}

pub fn count_params(reqs: &[ParamRequest]) -> u64 {
    reqs.iter().map(|r| r.numel() as u64).sum()
}

fn subnet_of(name: &str) -> &str {
    match name.split('.').take(2).collect::<Vec<_>>().as_slice() {
        ["dslb", "tcm"] => "stcm_shared",
        ["dslb", net] => net,
        [net, ..] => net,
        [] => "",
    }
}

pub fn complexity_report(cfg: &EngineConfig) -> Result<ComplexityReport> {
    cfg.validate()?;
    let mut rec = Recorder::default();
    let net = SfNet::build(&cfg.arch, cfg.bands.band_bins(), &mut rec)?;
    let mut params_per_subnet = BTreeMap::new();
    for r in &rec.requests {
        *params_per_subnet
            .entry(subnet_of(&r.name).to_string())
            .or_insert(0) += r.numel() as u64;
    }
    let macs_per_frame: BTreeMap<String, u64> = net
        .macs_per_frame()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let fps = cfg.frontend.frames_per_second();
    Ok(ComplexityReport {
        params_total: count_params(&rec.requests),
        params_per_subnet,
        macs_per_second: macs_per_frame.values().sum::<u64>() as f64 * fps,
        macs_per_frame,
        frames_per_second: fps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Conv2d, LayerSpec};

    #[test]
    fn pointwise_conv_with_bias_has_nine_params() {
        let mut rec = Recorder::default();
        Conv2d::load(&mut rec, "c", LayerSpec::pointwise(2, 3), 1, 1).unwrap();
        assert_eq!(count_params(&rec.requests), 9);
    }

    // Closed-form counts, written independently of the layer code.
    fn block(i: u64, o: u64, kf: u64) -> u64 {
        o * i * 2 * kf + 4 * o
    }
    fn enc(i: u64, c: u64) -> u64 {
        block(i, c, 5) + 4 * block(c, c, 3)
    }
    fn dec(c: u64) -> u64 {
        4 * block(2 * c, c, 3) + block(2 * c, c, 5)
    }
    fn stcm(w: u64, h: u64) -> u64 {
        2 * w * h + 5 * h * h + 8 * h + w
    }
    fn att(g: u64) -> u64 {
        g * g + g
    }
    fn closed_form(cfg: &EngineConfig) -> BTreeMap<&'static str, u64> {
        let a = &cfg.arch;
        let (c, s, h) = (a.dslb_channels as u64, a.sub_channels as u64, a.tcm_hidden as u64);
        let (gd, gs, n) = (a.dslb_groups as u64, a.sub_groups as u64, a.dilations.len() as u64);
        let tcm_d = gd * n * stcm(5 * c, h);
        let sub = |g: u64| {
            enc(1, s) + enc(g, s) + (2 * s * s + s) + gs * n * stcm(5 * s, h) + att(gs) + dec(s) + 2 * (s + 1)
        };
        let own = if a.share_stcm { 0 } else { tcm_d };
        let mut m = BTreeMap::new();
        m.insert("me", enc(1, c) + att(gd) + dec(c) + 2 * (c + 1) + own);
        m.insert("cp", enc(2, c) + att(gd) + 2 * dec(c) + 2 * (c + 1) + own);
        if a.share_stcm {
            m.insert("stcm_shared", tcm_d);
        }
        m.insert("mbm", sub(1));
        m.insert("hbm", sub(2));
        m
    }

    #[test]
    fn matches_closed_form_counts() {
        for share in [true, false] {
            let mut cfg = EngineConfig::default();
            cfg.arch.share_stcm = share;
            let r = complexity_report(&cfg).unwrap();
            let want = closed_form(&cfg);
            for (k, v) in &want {
                assert_eq!(r.params_per_subnet[*k], *v, "{k}");
            }
            assert_eq!(r.params_per_subnet.len(), want.len());
            assert_eq!(r.params_total, want.values().sum::<u64>());
        }
    }

    #[test]
    fn totals_equal_sum_of_parts_and_are_deterministic() {
        let cfg = EngineConfig::default();
        let r = complexity_report(&cfg).unwrap();
        assert_eq!(r.params_total, r.params_per_subnet.values().sum::<u64>());
        assert_eq!(
            r.macs_per_second,
            r.macs_per_frame.values().sum::<u64>() as f64 * 100.0
        );
        assert_eq!(r, complexity_report(&cfg).unwrap());
    }

    #[test]
    fn sharing_saves_exactly_one_stack() {
        let shared = complexity_report(&EngineConfig::default()).unwrap();
        let mut cfg = EngineConfig::default();
        cfg.arch.share_stcm = false;
        let split = complexity_report(&cfg).unwrap();
        assert_eq!(
            split.params_total - shared.params_total,
            shared.params_per_subnet["stcm_shared"]
        );
        // compute is unchanged: both nets run the stack either way
        assert_eq!(split.macs_per_second, shared.macs_per_second);
    }

    #[test]
    fn doubling_widths_roughly_quadruples_params() {
        let base = complexity_report(&EngineConfig::default()).unwrap();
        let mut cfg = EngineConfig::default();
        cfg.arch.dslb_channels *= 2;
        cfg.arch.sub_channels *= 2;
        cfg.arch.tcm_hidden *= 2;
        let big = complexity_report(&cfg).unwrap();
        let ratio = big.params_total as f64 / base.params_total as f64;
        let want = closed_form(&cfg).values().sum::<u64>() as f64
            / closed_form(&EngineConfig::default()).values().sum::<u64>() as f64;
        assert_eq!(ratio, want);
        assert!((3.8..4.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn conv_macs_follow_output_size() {
        // 161 -> 80 bins, kernel (2, 5), 1 -> 64 channels
        let mut rec = Recorder::default();
        let layer = Conv2d::load(&mut rec, "c", LayerSpec::conv(1, 64, (2, 5), 2), 161, 80).unwrap();
        assert_eq!(layer.macs_per_frame(), 80 * 5 * 2 * 64);
    }
}
