//! `sfnet`: command-line front end for the SF-Net enhancement engine.
//!
//! Exit codes: 0 success, 2 data error (audio, configuration, metrics
//! domain), 3 weight-file error, 64 usage error. `--help` and `--version`
//! exit with 0.

mod commands;
mod fail;
mod wav;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::fail::EXIT_USAGE;

#[derive(Parser, Debug)]
#[command(name = "sfnet", version, about = "Full-band (48 kHz) streaming speech enhancement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enhance a 48 kHz mono WAV file. The output keeps the input's length
    /// and sample format.
    Enhance(EnhanceArgs),
    /// SSNR, SDR and SNR of an estimate against a reference.
    Metrics(MetricsArgs),
    /// Mix clean speech and noise at a given SNR (float32 output).
    Mix(MixArgs),
    /// Write a seeded random weight file.
    Init(InitArgs),
    /// Parameter and MAC counts of a configuration or weight file.
    Describe(DescribeArgs),
    /// Stream synthetic noise through the engine and report the real-time factor.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Offline,
    Streaming,
}

#[derive(Args, Debug)]
struct EnhanceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// `.sfnw` weight file.
    #[arg(long, conflicts_with = "identity")]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Offline)]
    mode: Mode,
    /// Samples per chunk in streaming mode [default: 480].
    #[arg(long)]
    chunk: Option<usize>,
    /// Passthrough configuration instead of a network.
    #[arg(long)]
    identity: bool,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct MixArgs {
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    /// Target clean-to-noise ratio in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr: f64,
    #[arg(long)]
    output: PathBuf,
    /// Also write the scaled components next to the output as
    /// `<stem>.clean.wav` and `<stem>.noise.wav`.
    #[arg(long)]
    components: bool,
}

#[derive(Args, Debug)]
struct InitArgs {
    /// JSON engine configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct DescribeArgs {
    /// Describe the configuration stored in this weight file.
    #[arg(long, conflicts_with = "config")]
    weights: Option<PathBuf>,
    /// JSON engine configuration [default: built-in].
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Weight file; seeded random weights for the default configuration when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sfnet: {f}");
            ExitCode::from(f.code)
        }
    }
}
