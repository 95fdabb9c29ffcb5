use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bands::RealGrid;
use crate::error::{dim_err, Error, Result};
use crate::frontend::Spectrogram;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the RI term against the magnitude term in the low band.
    pub mu: f64,
    /// Weight of the low-band loss in the full loss.
    pub alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { mu: 0.5, alpha: 0.1 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::Config(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_ri: f64,
    pub l_mag: f64,
    pub l_lb: f64,
    pub l_mb_mag: f64,
    pub l_hb_mag: f64,
    pub l_full: f64,
}

impl LossBreakdown {
    fn assemble(l_ri: f64, l_mag: f64, l_mb_mag: f64, l_hb_mag: f64, cfg: &LossConfig) -> Self {
        let l_lb = cfg.mu * l_ri + (1.0 - cfg.mu) * l_mag;
        Self {
            l_ri,
            l_mag,
            l_lb,
            l_mb_mag,
            l_hb_mag,
            l_full: cfg.alpha * l_lb + l_mb_mag + l_hb_mag,
        }
    }
}

/// Derivatives of `l_full` with respect to every estimated value.
#[derive(Clone, Debug, PartialEq)]
pub struct FullGradient {
    /// `d/d re + i d/d im` per low-band bin.
    pub lb: Vec<Complex64>,
    pub mb: Vec<f64>,
    pub hb: Vec<f64>,
}

fn check_pair(est: &Spectrogram, target: &Spectrogram) -> Result<()> {
    if est.frames() != target.frames() || est.bins() != target.bins() {
        return dim_err(format!(
            "estimate is {}x{}, target {}x{}",
            est.frames(),
            est.bins(),
            target.frames(),
            target.bins()
        ));
    }
    if est.is_compressed() != target.is_compressed() {
        return Err(Error::State(
            "estimate and target are in different magnitude domains".into(),
        ));
    }
    Ok(())
}

/// RI and magnitude errors with their gradients for the whole grid.
/// The gradient returned is that of `mu * l_ri + (1 - mu) * l_mag`.
fn lb_terms(est: &Spectrogram, target: &Spectrogram, mu: f64) -> (f64, f64, Vec<Complex64>) {
    let mut l_ri = 0.0;
    let mut l_mag = 0.0;
    let grad = est
        .data()
        .iter()
        .zip(target.data())
        .map(|(&e, &t)| {
            let d = e - t;
            l_ri += d.re * d.re + d.im * d.im;
            let (me, mt) = (e.norm(), t.norm());
            l_mag += (me - mt) * (me - mt);
            let g_ri = d * (2.0 * mu);
            // |e| is not differentiable at 0; the magnitude term contributes nothing there.
            let g_mag = if me > 0.0 {
                e * (2.0 * (1.0 - mu) * (me - mt) / me)
            } else {
                Complex64::new(0.0, 0.0)
            };
            g_ri + g_mag
        })
        .collect();
    (l_ri, l_mag, grad)
}

/// Low-band loss: `mu * L_RI + (1 - mu) * L_mag`, with squared Frobenius
/// errors of the real/imaginary parts and of the magnitudes.
pub fn loss_lb(
    est: &Spectrogram,
    target: &Spectrogram,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, Vec<Complex64>)> {
    cfg.validate()?;
    check_pair(est, target)?;
    let (l_ri, l_mag, grad) = lb_terms(est, target, cfg.mu);
    Ok((LossBreakdown::assemble(l_ri, l_mag, 0.0, 0.0, cfg), grad))
}

fn mag_terms(est: &RealGrid, target: &RealGrid) -> Result<(f64, Vec<f64>)> {
    if !est.same_shape(target) {
        return dim_err(format!(
            "magnitude estimate is {}x{}, target {}x{}",
            est.frames, est.bins, target.frames, target.bins
        ));
    }
    let mut loss = 0.0;
    let grad = est
        .data
        .iter()
        .zip(&target.data)
        .map(|(&e, &t)| {
            loss += (e - t) * (e - t);
            2.0 * (e - t)
        })
        .collect();
    Ok((loss, grad))
}

/// Full loss `alpha * L_lb + L_mb + L_hb` and its gradient.
#[allow(clippy::too_many_arguments)]
pub fn loss_full_with_grad(
    lb_est: &Spectrogram,
    lb_target: &Spectrogram,
    mb_est: &RealGrid,
    mb_target: &RealGrid,
    hb_est: &RealGrid,
    hb_target: &RealGrid,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, FullGradient)> {
    cfg.validate()?;
    check_pair(lb_est, lb_target)?;
    let (l_ri, l_mag, lb) = lb_terms(lb_est, lb_target, cfg.mu);
    let (l_mb, mb) = mag_terms(mb_est, mb_target)?;
    let (l_hb, hb) = mag_terms(hb_est, hb_target)?;
    let lb = lb.into_iter().map(|g| g * cfg.alpha).collect();
    Ok((
        LossBreakdown::assemble(l_ri, l_mag, l_mb, l_hb, cfg),
        FullGradient { lb, mb, hb },
    ))
}

pub fn loss_full(
    lb_est: &Spectrogram,
    lb_target: &Spectrogram,
    mb_est: &RealGrid,
    mb_target: &RealGrid,
    hb_est: &RealGrid,
    hb_target: &RealGrid,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    loss_full_with_grad(lb_est, lb_target, mb_est, mb_target, hb_est, hb_target, cfg).map(|(l, _)| l)
}
