use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::frontend::SAMPLE_RATE;
use crate::graph::Enhancer;

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub audio_secs: f64,
    pub processing_secs: f64,
    /// Processing time over audio time.
    pub rtf: f64,
}

/// Stream `seconds` of seeded white noise through a fresh stream in 10 ms
/// chunks and time it, after a one-second warm-up on a separate stream.
pub fn bench_stream(engine: &Enhancer, seconds: f64, seed: u64) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * f64::from(SAMPLE_RATE)).round() as usize;
    let audio: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let hop = engine.config().frontend.hop;

    let mut warm = engine.create_stream();
    for chunk in audio.chunks(hop).take(SAMPLE_RATE as usize / hop) {
        warm.process_samples(chunk)?;
    }

    let mut stream = engine.create_stream();
    let start = Instant::now();
    let mut emitted = 0;
    for chunk in audio.chunks(hop) {
        emitted += stream.process_samples(chunk)?.len();
    }
    emitted += stream.flush()?.len();
    let elapsed = start.elapsed().as_secs_f64();
    debug_assert_eq!(emitted, n);
    let audio_secs = n as f64 / f64::from(SAMPLE_RATE);
    Ok(BenchReport {
        audio_secs,
        processing_secs: elapsed,
        rtf: elapsed / audio_secs,
    })
}
