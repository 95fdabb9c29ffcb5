//! Training losses (as oracles with analytic gradients) and evaluation
//! metrics.
//!
//! Losses work on compressed spectra, the domain the networks see.

mod loss;
mod signal;

pub use loss::{
    loss_full, loss_full_with_grad, loss_lb, FullGradient, LossBreakdown, LossConfig,
};
pub use signal::{
    mix_at_snr, sdr, snr_db, ssnr, MixResult, MIX_PEAK, SDR_CAP_DB, SSNR_FRAME, SSNR_MAX_DB,
    SSNR_MIN_DB, SSNR_SILENCE,
};
