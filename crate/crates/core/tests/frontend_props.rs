use num_complex::Complex64;
use proptest::prelude::*;
use sfnet::frontend::{compress, decompress, hann_periodic, Frontend};
use sfnet::{FrontendConfig, Spectrogram, Waveform, SAMPLE_RATE};

fn frontend() -> Frontend {
    Frontend::new(FrontendConfig::default()).unwrap()
}

fn wave(x: Vec<f64>) -> Waveform {
    Waveform::new(x, SAMPLE_RATE).unwrap()
}

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_reconstructs_the_interior(x in signal(6000)) {
        let fe = frontend();
        let s = fe.stft(&wave(x.clone())).unwrap();
        prop_assert_eq!(s.frames(), x.len().div_ceil(480) + 1);
        let y = fe.istft(&s).unwrap().into_samples();
        prop_assert!(y.len() >= x.len());
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn stft_is_linear(
        pair in (1usize..4000).prop_flat_map(|n| (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (x, y) = pair;
        let fe = frontend();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let sx = fe.stft(&wave(x)).unwrap();
        let sy = fe.stft(&wave(y)).unwrap();
        let sm = fe.stft(&wave(mix)).unwrap();
        for ((m, u), v) in sm.data().iter().zip(sx.data()).zip(sy.data()) {
            prop_assert!((m - (u * a + v * b)).norm() < 1e-9);
        }
    }

    #[test]
    fn parseval_per_frame(frame in prop::collection::vec(-1.0f64..1.0, 960)) {
        let fe = frontend();
        let w = hann_periodic(960);
        let spec = fe.analyze_frame(&frame);
        let time: f64 = frame.iter().zip(&w).map(|(x, w)| (x * w).powi(2)).sum();
        // one-sided spectrum: DC and Nyquist once, the rest twice
        let freq: f64 = spec
            .iter()
            .enumerate()
            .map(|(k, z)| if k == 0 || k == 480 { z.norm_sqr() } else { 2.0 * z.norm_sqr() })
            .sum::<f64>()
            / 960.0;
        prop_assert!((time - freq).abs() <= 1e-6 * time.max(1e-12));
    }

    #[test]
    fn compression_keeps_phase_and_zero_set(
        values in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0, prop::bool::weighted(0.2)), 1..300),
        beta in 0.1f64..=1.0,
    ) {
        let data: Vec<Complex64> = values
            .iter()
            .map(|&(re, im, zero)| if zero { Complex64::new(0.0, 0.0) } else { Complex64::new(re, im) })
            .collect();
        let s = Spectrogram::new(1, data.len(), data.clone(), 50.0, false).unwrap();
        let c = compress(&s, beta).unwrap();
        for (z, w) in data.iter().zip(c.data()) {
            prop_assert_eq!(z.norm() == 0.0, w.norm() == 0.0);
            if z.norm() > 0.0 {
                prop_assert!((z.arg() - w.arg()).abs() <= 4.0 * f64::EPSILON * z.arg().abs().max(1.0));
                prop_assert!((w.norm() - z.norm().powf(beta)).abs() <= 1e-12 * z.norm().powf(beta).max(1.0));
            }
        }
        let back = decompress(&c, beta).unwrap();
        for (z, w) in data.iter().zip(back.data()) {
            prop_assert!((z - w).norm() <= 1e-9 * z.norm().max(1.0));
        }
    }
}

#[test]
fn squared_window_overlap_is_not_constant_but_normalised_per_sample() {
    // w^2(n) + w^2(n + 480) = sin^4 + cos^4, which ranges over [1/2, 1].
    let w = hann_periodic(960);
    let sums: Vec<f64> = (0..480).map(|n| w[n] * w[n] + w[n + 480] * w[n + 480]).collect();
    let (lo, hi) = sums.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!((lo - 0.5).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    let norm = frontend().overlap_norm().to_vec();
    for (a, b) in norm.iter().zip(&sums) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn plain_window_sum_is_constant() {
    let w = hann_periodic(960);
    for n in 0..480 {
        assert!((w[n] + w[n + 480] - 1.0).abs() < 1e-15);
    }
}
