#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATE: u32 = 48_000;

pub fn sfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfnet"))
        .args(args)
        .output()
        .expect("sfnet binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

pub fn write_f32(path: &Path, x: &[f64]) {
    let spec = WavSpec {
        channels: 1,
        sample_rate: RATE,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).unwrap();
    for &v in x {
        w.write_sample(v as f32).unwrap();
    }
    w.finalize().unwrap();
}

pub fn write_pcm16(path: &Path, x: &[i16], channels: u16) {
    let spec = WavSpec {
        channels,
        sample_rate: RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec).unwrap();
    for &v in x {
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();
}

/// Samples as f64 plus the file's spec.
pub fn read(path: &Path) -> (Vec<f64>, WavSpec) {
    let r = WavReader::open(path).unwrap();
    let spec = r.spec();
    let x = match spec.sample_format {
        SampleFormat::Float => r.into_samples::<f32>().map(|v| f64::from(v.unwrap())).collect(),
        SampleFormat::Int => r
            .into_samples::<i16>()
            .map(|v| f64::from(v.unwrap()) / 32768.0)
            .collect(),
    };
    (x, spec)
}

/// Voiced, syllable-modulated harmonic signal in light white noise.
pub fn speech_like(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phase = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / f64::from(RATE);
            let f0 = 150.0 + 50.0 * (2.0 * PI * 0.7 * t).sin();
            phase += 2.0 * PI * f0 / f64::from(RATE);
            let voiced: f64 = (1..=30)
                .map(|h| (h as f64 * phase).sin() / h as f64)
                .sum();
            let envelope = 0.5 + 0.5 * (2.0 * PI * 4.0 * t).sin().max(0.0);
            0.2 * envelope * voiced + rng.gen_range(-0.02..0.02)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
