use crate::error::{dim_err, Error, Result};
use crate::frontend::{Waveform, SAMPLE_RATE};

/// Segment length for SSNR: 20 ms.
pub const SSNR_FRAME: usize = 960;
pub const SSNR_MIN_DB: f64 = -10.0;
pub const SSNR_MAX_DB: f64 = 35.0;
/// Segments whose reference energy is below this are skipped.
pub const SSNR_SILENCE: f64 = 1e-10;
/// SDR is reported within `[-SDR_CAP_DB, SDR_CAP_DB]`.
pub const SDR_CAP_DB: f64 = 100.0;
/// Peak level after anti-clipping normalisation.
pub const MIX_PEAK: f64 = 0.99;

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn check_pair(reference: &Waveform, est: &Waveform) -> Result<()> {
    if reference.len() != est.len() {
        return dim_err(format!(
            "reference has {} samples, estimate {}",
            reference.len(),
            est.len()
        ));
    }
    Ok(())
}

/// `10 log10(|signal|^2 / |noise|^2)`.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    10.0 * (energy(signal) / energy(noise)).log10()
}

/// Segmental SNR over non-overlapping 20 ms segments (the last one may be
/// shorter), each clamped to `[-10, 35]` dB.
pub fn ssnr(reference: &Waveform, est: &Waveform) -> Result<f64> {
    check_pair(reference, est)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, e) in reference
        .samples()
        .chunks(SSNR_FRAME)
        .zip(est.samples().chunks(SSNR_FRAME))
    {
        let sig = energy(r);
        if sig < SSNR_SILENCE {
            continue;
        }
        let err: f64 = r.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum();
        let db = 10.0 * (sig / err).log10();
        total += db.clamp(SSNR_MIN_DB, SSNR_MAX_DB);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Domain("reference is silent in every segment".into()));
    }
    Ok(total / count as f64)
}

/// Projection SDR: the estimate is split into its component along the
/// reference and the remainder.
pub fn sdr(reference: &Waveform, est: &Waveform) -> Result<f64> {
    check_pair(reference, est)?;
    let r = reference.samples();
    let rr = energy(r);
    if rr == 0.0 {
        return Err(Error::Domain("SDR needs a non-zero reference".into()));
    }
    let er: f64 = est.samples().iter().zip(r).map(|(e, r)| e * r).sum();
    let scale = er / rr;
    let target = scale * scale * rr;
    let residual: f64 = est
        .samples()
        .iter()
        .zip(r)
        .map(|(e, r)| {
            let d = e - scale * r;
            d * d
        })
        .sum();
    let db = 10.0 * (target / residual).log10();
    Ok(if db.is_nan() { -SDR_CAP_DB } else { db.clamp(-SDR_CAP_DB, SDR_CAP_DB) })
}

/// Result of [`mix_at_snr`]. `clean + noise == mixture` up to rounding, and
/// all three carry the same peak gain.
#[derive(Clone, Debug, PartialEq)]
pub struct MixResult {
    pub mixture: Waveform,
    pub clean: Vec<f64>,
    pub noise: Vec<f64>,
    /// Factor applied to the noise to reach the requested SNR.
    pub noise_gain: f64,
    /// Anti-clipping factor applied to everything (1 when not needed).
    pub peak_gain: f64,
}

/// Scale `noise` (truncated to the clean length) so the clean-to-noise
/// energy ratio is `snr_db`, add it, and bring the peak down to 0.99 if the
/// sum would clip.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<MixResult> {
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("SNR must be finite, got {snr_db}")));
    }
    if noise.len() < clean.len() {
        return dim_err(format!(
            "noise has {} samples, clean needs {}",
            noise.len(),
            clean.len()
        ));
    }
    let c = clean.samples();
    let n = &noise.samples()[..c.len()];
    let (ec, en) = (energy(c), energy(n));
    if ec == 0.0 {
        return Err(Error::Domain("clean signal is silent".into()));
    }
    if en == 0.0 {
        return Err(Error::Domain("noise is silent over the clean length".into()));
    }
    let noise_gain = (ec / (en * 10f64.powf(snr_db / 10.0))).sqrt();
    let raw: Vec<f64> = c.iter().zip(n).map(|(a, b)| a + noise_gain * b).collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let peak_gain = if peak > 1.0 { MIX_PEAK / peak } else { 1.0 };
    Ok(MixResult {
        mixture: Waveform::new(raw.iter().map(|v| v * peak_gain).collect(), SAMPLE_RATE)?,
        clean: c.iter().map(|v| v * peak_gain).collect(),
        noise: n.iter().map(|v| v * noise_gain * peak_gain).collect(),
        noise_gain,
        peak_gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wave(x: Vec<f64>) -> Waveform {
        Waveform::new(x, SAMPLE_RATE).unwrap()
    }

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
    }

    #[test]
    fn ssnr_caps() {
        let x = wave(white(5000, 1));
        assert_eq!(ssnr(&x, &x).unwrap(), 35.0);
        let z = wave(vec![0.0; 5000]);
        assert!(ssnr(&x, &z).unwrap().abs() < 1e-12);
        assert!(matches!(ssnr(&z, &x), Err(Error::Domain(_))));
    }

    #[test]
    fn ssnr_ten_db_segments() {
        // each segment's noise is rescaled to exactly a tenth of its energy
        let r = white(960 * 20, 2);
        let n = white(960 * 20, 3);
        let mut est = Vec::new();
        for (rs, ns) in r.chunks(960).zip(n.chunks(960)) {
            let g = (energy(rs) / (10.0 * energy(ns))).sqrt();
            est.extend(rs.iter().zip(ns).map(|(a, b)| a + g * b));
        }
        let v = ssnr(&wave(r), &wave(est)).unwrap();
        assert!((v - 10.0).abs() < 0.5, "{v}");
        assert!((v - 10.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn ssnr_skips_silent_segments_and_uses_partial_tail() {
        let mut r = vec![0.0; 960];
        r.extend(white(100, 4));
        let mut e = r.clone();
        e[1000] += 1.0;
        let expected = (10.0 * (energy(&r[960..]) / 1.0).log10()).clamp(-10.0, 35.0);
        assert!((ssnr(&wave(r), &wave(e)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn sdr_caps_and_orthogonal_noise() {
        let r = white(4096, 5);
        let doubled: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert_eq!(sdr(&wave(r.clone()), &wave(doubled)).unwrap(), 100.0);

        // Gram-Schmidt: noise orthogonal to the reference with a tenth of its energy
        let mut n = white(4096, 6);
        let proj: f64 = n.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / energy(&r);
        n.iter_mut().zip(&r).for_each(|(a, b)| *a -= proj * b);
        let g = (energy(&r) / (10.0 * energy(&n))).sqrt();
        n.iter_mut().for_each(|v| *v *= g);
        assert_eq!(sdr(&wave(r.clone()), &wave(n.clone())).unwrap(), -100.0);
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + b).collect();
        assert!((sdr(&wave(r.clone()), &wave(est)).unwrap() - 10.0).abs() < 1e-9);

        assert!(matches!(
            sdr(&wave(vec![0.0; 10]), &wave(vec![1.0; 10])),
            Err(Error::Domain(_))
        ));
        assert_eq!(sdr(&wave(r), &wave(vec![0.0; 4096])).unwrap(), -100.0);
    }

    #[test]
    fn mix_reaches_requested_snr() {
        let c = wave(white(48000, 7));
        let n = wave(white(50000, 8));
        for snr in [-5.0, 0.0, 15.0] {
            let m = mix_at_snr(&c, &n, snr).unwrap();
            assert!((snr_db(&m.clean, &m.noise) - snr).abs() < 1e-6);
            assert_eq!(m.mixture.len(), c.len());
        }
        let m = mix_at_snr(&c, &n, 0.0).unwrap();
        assert!((energy(&m.clean) / energy(&m.noise) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mix_normalises_clipping_peaks() {
        let c = wave(vec![0.9, -0.9, 0.9, -0.9]);
        let n = wave(vec![1.0, -1.0, 1.0, -1.0]);
        let m = mix_at_snr(&c, &n, 0.0).unwrap();
        let peak = m.mixture.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak - 0.99).abs() < 1e-12);
        assert!(m.peak_gain < 1.0);
        assert!((snr_db(&m.clean, &m.noise)).abs() < 1e-9);
    }

    #[test]
    fn mix_high_snr_is_clean() {
        let c = wave(white(4800, 9));
        let m = mix_at_snr(&c, &wave(white(4800, 10)), 100.0).unwrap();
        let rms = (m
            .mixture
            .samples()
            .iter()
            .zip(c.samples())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / 4800.0)
            .sqrt();
        assert!(rms < 1e-4);
    }

    #[test]
    fn mix_errors() {
        let c = wave(white(100, 1));
        assert!(matches!(mix_at_snr(&c, &wave(white(50, 2)), 0.0), Err(Error::Dimension(_))));
        assert!(matches!(mix_at_snr(&wave(vec![0.0; 10]), &c, 0.0), Err(Error::Domain(_))));
        assert!(matches!(mix_at_snr(&c, &wave(vec![0.0; 100]), 0.0), Err(Error::Domain(_))));
    }
}
