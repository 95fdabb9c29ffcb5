//! 48 kHz mono WAV files, 16-bit PCM or 32-bit float.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use sfnet::SAMPLE_RATE;

use crate::fail::{CliResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Pcm16,
    Float32,
}

impl Encoding {
    fn spec(self) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            Self::Pcm16 => (16, SampleFormat::Int),
            Self::Float32 => (32, SampleFormat::Float),
        };
        WavSpec { channels: 1, sample_rate: SAMPLE_RATE, bits_per_sample, sample_format }
    }
}

#[derive(Clone, Debug)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub encoding: Encoding,
}

const PCM16_SCALE: f64 = 32768.0;

pub fn read(path: &Path) -> CliResult<Audio> {
    let fail = |msg: String| Failure::data(format!("{}: {msg}", path.display()));
    let reader = WavReader::open(path).map_err(|e| fail(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(fail(format!(
            "only mono input is accepted (1 channel), file has {} channels",
            spec.channels
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(fail(format!(
            "sample rate must be {SAMPLE_RATE} Hz, file is {} Hz; resample it first",
            spec.sample_rate
        )));
    }
    let encoding = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => Encoding::Pcm16,
        (SampleFormat::Float, 32) => Encoding::Float32,
        (format, bits) => {
            return Err(fail(format!(
                "unsupported sample format ({bits}-bit {format:?}); use 16-bit PCM or 32-bit float"
            )))
        }
    };
    let samples = match encoding {
        Encoding::Pcm16 => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / PCM16_SCALE))
            .collect::<Result<Vec<_>, _>>(),
        Encoding::Float32 => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<Vec<_>, _>>(),
    }
    .map_err(|e| fail(e.to_string()))?;
    Ok(Audio { samples, encoding })
}

pub fn write(path: &Path, samples: &[f64], encoding: Encoding) -> CliResult {
    let fail = |e: hound::Error| Failure::data(format!("{}: {e}", path.display()));
    let mut w = WavWriter::create(path, encoding.spec()).map_err(fail)?;
    for &v in samples {
        match encoding {
            Encoding::Pcm16 => {
                let q = (v * PCM16_SCALE).round().clamp(-PCM16_SCALE, PCM16_SCALE - 1.0);
                w.write_sample(q as i16)
            }
            Encoding::Float32 => w.write_sample(v as f32),
        }
        .map_err(fail)?;
    }
    w.finalize().map_err(fail)
}
