use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sfnet::graph::bench_stream;
use sfnet::metrics::{mix_at_snr, sdr, snr_db, ssnr};
use sfnet::weights::{self, complexity_report, ComplexityReport, WeightSet};
use sfnet::{EngineConfig, Enhancer, Waveform, SAMPLE_RATE};

use crate::fail::{CliResult, Failure};
use crate::wav::{self, Encoding};
use crate::{
    BenchArgs, Command, DescribeArgs, EnhanceArgs, InitArgs, MetricsArgs, MixArgs, Mode,
};

const DEFAULT_CHUNK: usize = 480;

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Enhance(a) => enhance(&a),
        Command::Metrics(a) => metrics(&a),
        Command::Mix(a) => mix(&a),
        Command::Init(a) => init(&a),
        Command::Describe(a) => describe(&a),
        Command::Bench(a) => bench(&a),
    }
}

fn load_weights(path: &Path) -> CliResult<WeightSet> {
    weights::load(path).map_err(|e| Failure::weights(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> CliResult<EngineConfig> {
    let Some(path) = path else {
        return Ok(EngineConfig::default());
    };
    let fail = |msg: String| Failure::data(format!("{}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let cfg: EngineConfig = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    cfg.validate().map_err(|e| fail(e.to_string()))?;
    Ok(cfg)
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialise"));
}

fn enhance(a: &EnhanceArgs) -> CliResult {
    let chunk = match (a.mode, a.chunk) {
        (Mode::Offline, Some(_)) => {
            return Err(Failure::usage("--chunk only applies to --mode streaming"))
        }
        (_, Some(0)) => return Err(Failure::usage("--chunk must be at least 1")),
        (_, c) => c.unwrap_or(DEFAULT_CHUNK),
    };
    let engine = match (&a.weights, a.identity) {
        (Some(path), false) => load_weights(path)?.enhancer()?,
        (None, true) => Enhancer::identity(EngineConfig::default())?,
        _ => return Err(Failure::usage("give exactly one of --weights or --identity")),
    };
    let audio = wav::read(&a.input)?;
    let noisy = Waveform::new(audio.samples, SAMPLE_RATE)?;

    let start = Instant::now();
    let out = match a.mode {
        Mode::Offline => engine.enhance(&noisy)?.into_samples(),
        Mode::Streaming => {
            let mut stream = engine.create_stream();
            let mut out = Vec::with_capacity(noisy.len());
            for c in noisy.samples().chunks(chunk) {
                out.extend(stream.process_samples(c)?);
            }
            out.extend(stream.flush()?);
            out
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    wav::write(&a.output, &out, audio.encoding)?;

    let secs = noisy.duration_secs();
    let rtf = if secs > 0.0 { elapsed / secs } else { 0.0 };
    let mode = match a.mode {
        Mode::Offline => "offline".to_string(),
        Mode::Streaming => format!("streaming, {chunk}-sample chunks"),
    };
    println!("enhanced {secs:.2} s in {elapsed:.3} s ({mode}); RTF {rtf:.3}");
    Ok(())
}

fn metrics(a: &MetricsArgs) -> CliResult {
    let load = |p: &Path| -> CliResult<Waveform> {
        Ok(Waveform::new(wav::read(p)?.samples, SAMPLE_RATE)?)
    };
    let (r, e) = (load(&a.reference)?, load(&a.est)?);
    let ssnr_db = ssnr(&r, &e)?;
    let sdr_db = sdr(&r, &e)?;
    let residual: Vec<f64> = e.samples().iter().zip(r.samples()).map(|(e, r)| e - r).collect();
    let snr = snr_db(r.samples(), &residual);
    if a.json {
        print_json(&json!({ "ssnr_db": ssnr_db, "sdr_db": sdr_db, "snr_db": snr }));
    } else {
        println!("SSNR {ssnr_db:.4} dB");
        println!("SDR  {sdr_db:.4} dB");
        println!("SNR  {snr:.4} dB (reference vs. estimate - reference)");
    }
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.wav"))
}

fn mix(a: &MixArgs) -> CliResult {
    let clean = Waveform::new(wav::read(&a.clean)?.samples, SAMPLE_RATE)?;
    let noise = Waveform::new(wav::read(&a.noise)?.samples, SAMPLE_RATE)?;
    let m = mix_at_snr(&clean, &noise, a.snr)?;
    wav::write(&a.output, m.mixture.samples(), Encoding::Float32)?;
    if a.components {
        wav::write(&sibling(&a.output, "clean"), &m.clean, Encoding::Float32)?;
        wav::write(&sibling(&a.output, "noise"), &m.noise, Encoding::Float32)?;
    }
    println!(
        "mixed at {} dB: noise gain {:.6}, peak gain {:.6}",
        a.snr, m.noise_gain, m.peak_gain
    );
    Ok(())
}

fn init(a: &InitArgs) -> CliResult {
    let cfg = load_config(a.config.as_deref())?;
    let ws = weights::init_weights(&cfg, a.seed)?;
    weights::save(&ws, &a.output)
        .map_err(|e| Failure::weights(format!("{}: {e}", a.output.display())))?;
    println!(
        "wrote {}: {} tensors, {} parameters, seed {}",
        a.output.display(),
        ws.tensors().len(),
        ws.params_total(),
        a.seed
    );
    Ok(())
}

/// Totals with and without S-TCM sharing.
struct Sharing {
    shared_tensors: u64,
    unshared_total: u64,
}

fn sharing(cfg: &EngineConfig, report: &ComplexityReport) -> CliResult<Option<Sharing>> {
    if !cfg.arch.share_stcm {
        return Ok(None);
    }
    let mut unshared = cfg.clone();
    unshared.arch.share_stcm = false;
    Ok(Some(Sharing {
        shared_tensors: report.params_per_subnet.get("stcm_shared").copied().unwrap_or(0),
        unshared_total: complexity_report(&unshared)?.params_total,
    }))
}

fn describe(a: &DescribeArgs) -> CliResult {
    let (cfg, source) = match &a.weights {
        Some(path) => {
            let ws = load_weights(path)?;
            (ws.config().clone(), path.display().to_string())
        }
        None => (
            load_config(a.config.as_deref())?,
            a.config
                .as_ref()
                .map_or("built-in configuration".into(), |p| p.display().to_string()),
        ),
    };
    let report = complexity_report(&cfg)?;
    let share = sharing(&cfg, &report)?;

    if a.json {
        let mut v = json!({
            "params_total": report.params_total,
            "macs_per_sec": report.macs_per_second,
            "params_per_subnet": report.params_per_subnet,
            "macs_per_frame": report.macs_per_frame,
            "frames_per_sec": report.frames_per_second,
            "published_params": weights::PUBLISHED_PARAMS,
            "published_macs_per_sec": weights::PUBLISHED_MACS_PER_SEC,
            "params_deviation": report.params_deviation(),
            "macs_deviation": report.macs_deviation(),
        });
        if let Some(s) = &share {
            v["stcm_shared_params"] = json!(s.shared_tensors);
            v["params_total_unshared"] = json!(s.unshared_total);
        }
        print_json(&v);
        return Ok(());
    }

    println!("SF-Net complexity ({source})");
    println!("parameters: {}", report.params_total);
    for (name, n) in &report.params_per_subnet {
        println!("  {name:<12} {n:>10}");
    }
    println!("MACs per frame ({} frames/s):", report.frames_per_second);
    for (name, n) in &report.macs_per_frame {
        println!("  {name:<12} {n:>10}");
    }
    println!("MACs per second: {:.4} G", report.macs_per_second / 1e9);
    match share {
        Some(s) => println!(
            "S-TCM sharing: {} shared parameters; without sharing the total is {} (+{})",
            s.shared_tensors,
            s.unshared_total,
            s.unshared_total - report.params_total
        ),
        None => println!("S-TCM sharing: off"),
    }
    println!("{}", report.published_line());
    Ok(())
}

fn bench(a: &BenchArgs) -> CliResult {
    if !(a.seconds.is_finite() && a.seconds > 0.0) {
        return Err(Failure::usage(format!("--seconds must be positive, got {}", a.seconds)));
    }
    let ws = match &a.weights {
        Some(path) => load_weights(path)?,
        None => weights::init_weights(&EngineConfig::default(), a.seed)?,
    };
    let engine = ws.enhancer()?;
    let macs = complexity_report(ws.config())?.macs_per_second;
    let r = bench_stream(&engine, a.seconds, a.seed)?;
    if a.json {
        print_json(&json!({
            "rtf": r.rtf,
            "audio_secs": r.audio_secs,
            "processing_secs": r.processing_secs,
            "macs_per_sec": macs,
            "params_total": ws.params_total(),
        }));
    } else {
        println!(
            "streamed {:.2} s in {:.3} s: RTF {:.3} at {:.2} G MACs/s (published model: 5.62 G MACs/s in real time)",
            r.audio_secs,
            r.processing_secs,
            r.rtf,
            macs / 1e9
        );
    }
    Ok(())
}
