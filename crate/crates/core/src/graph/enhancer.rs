use std::sync::Arc;

use crate::bands::{
    add_residual, apply_gain_with_phase, fuse_bands, mag_phase, split_bands, RealGrid, SubBandSet,
};
use crate::error::{Error, Result};
use crate::frontend::{compress, decompress, Frontend, Spectrogram, Waveform, SAMPLE_RATE};
use crate::graph::{EngineConfig, SfNet, SfNetState};

/// What produces the gains and the low-band residual.
#[derive(Clone, Debug)]
pub enum Backend {
    /// Unit gains and zero residual: the whole chain reduces to analysis
    /// followed by synthesis.
    Identity,
    Network(Arc<SfNet>),
}

/// The four network evaluations of the band pipeline.
trait Stage {
    fn lb_gain(&mut self, mag: &RealGrid) -> Result<RealGrid>;
    fn lb_residual(&mut self, lb: &Spectrogram) -> Result<Spectrogram>;
    fn mb_gain(&mut self, mag: &RealGrid, lb: &RealGrid) -> Result<RealGrid>;
    fn hb_gain(&mut self, mag: &RealGrid, lb: &RealGrid, mb: &RealGrid) -> Result<RealGrid>;
}

struct IdentityStage;

impl Stage for IdentityStage {
    fn lb_gain(&mut self, mag: &RealGrid) -> Result<RealGrid> {
        Ok(RealGrid::filled(mag.frames, mag.bins, 1.0))
    }
    fn lb_residual(&mut self, lb: &Spectrogram) -> Result<Spectrogram> {
        Ok(lb.like(vec![Default::default(); lb.data().len()]))
    }
    fn mb_gain(&mut self, mag: &RealGrid, _: &RealGrid) -> Result<RealGrid> {
        Ok(RealGrid::filled(mag.frames, mag.bins, 1.0))
    }
    fn hb_gain(&mut self, mag: &RealGrid, _: &RealGrid, _: &RealGrid) -> Result<RealGrid> {
        Ok(RealGrid::filled(mag.frames, mag.bins, 1.0))
    }
}

struct OfflineStage<'a>(&'a SfNet);

impl Stage for OfflineStage<'_> {
    fn lb_gain(&mut self, mag: &RealGrid) -> Result<RealGrid> {
        self.0.me().forward(mag)
    }
    fn lb_residual(&mut self, lb: &Spectrogram) -> Result<Spectrogram> {
        self.0.cp().forward(lb)
    }
    fn mb_gain(&mut self, mag: &RealGrid, lb: &RealGrid) -> Result<RealGrid> {
        self.0.mbm().forward(mag, &[lb])
    }
    fn hb_gain(&mut self, mag: &RealGrid, lb: &RealGrid, mb: &RealGrid) -> Result<RealGrid> {
        self.0.hbm().forward(mag, &[lb, mb])
    }
}

/// One frame at a time through the stateful path.
struct StreamingStage<'a> {
    net: &'a SfNet,
    state: &'a mut SfNetState,
}

fn single_frame(grid: &RealGrid) -> Result<&[f64]> {
    if grid.frames != 1 {
        return Err(Error::Dimension(format!(
            "streaming stage takes one frame, got {}",
            grid.frames
        )));
    }
    Ok(&grid.data)
}

impl Stage for StreamingStage<'_> {
    fn lb_gain(&mut self, mag: &RealGrid) -> Result<RealGrid> {
        let g = self.net.me().step(&mut self.state.me, single_frame(mag)?)?;
        RealGrid::new(1, mag.bins, g)
    }
    fn lb_residual(&mut self, lb: &Spectrogram) -> Result<Spectrogram> {
        if lb.frames() != 1 {
            return Err(Error::Dimension("streaming stage takes one frame".into()));
        }
        let r = self.net.cp().step(&mut self.state.cp, lb.frame(0))?;
        Ok(lb.like(r))
    }
    fn mb_gain(&mut self, mag: &RealGrid, lb: &RealGrid) -> Result<RealGrid> {
        let g = self
            .net
            .mbm()
            .step(&mut self.state.mbm, single_frame(mag)?, &[single_frame(lb)?])?;
        RealGrid::new(1, mag.bins, g)
    }
    fn hb_gain(&mut self, mag: &RealGrid, lb: &RealGrid, mb: &RealGrid) -> Result<RealGrid> {
        let g = self.net.hbm().step(
            &mut self.state.hbm,
            single_frame(mag)?,
            &[single_frame(lb)?, single_frame(mb)?],
        )?;
        RealGrid::new(1, mag.bins, g)
    }
}

/// Low band: magnitude gain with the noisy phase, plus the complex residual.
fn dslb(stage: &mut dyn Stage, lb: &Spectrogram) -> Result<Spectrogram> {
    let polar = mag_phase(lb);
    let gain = stage.lb_gain(&polar.mag)?;
    let coarse = apply_gain_with_phase(&polar, &gain)?;
    add_residual(&coarse, &stage.lb_residual(lb)?)
}

fn run_bands(stage: &mut dyn Stage, noisy: &SubBandSet) -> Result<SubBandSet> {
    let lb = dslb(stage, &noisy.lb)?;
    let lb_mag = mag_phase(&lb).mag;
    let mb_polar = mag_phase(&noisy.mb);
    let mb_gain = stage.mb_gain(&mb_polar.mag, &lb_mag)?;
    let mb = apply_gain_with_phase(&mb_polar, &mb_gain)?;
    let mb_mag = mag_phase(&mb).mag;
    let hb_polar = mag_phase(&noisy.hb);
    let hb_gain = stage.hb_gain(&hb_polar.mag, &lb_mag, &mb_mag)?;
    let hb = apply_gain_with_phase(&hb_polar, &hb_gain)?;
    Ok(SubBandSet { lb, mb, hb })
}

/// Noisy and estimated compressed sub-band spectra of one utterance.
#[derive(Clone, Debug)]
pub struct BandTrace {
    pub noisy: SubBandSet,
    pub estimate: SubBandSet,
}

/// Full-band enhancement, offline or streaming.
#[derive(Clone)]
pub struct Enhancer {
    cfg: EngineConfig,
    frontend: Frontend,
    backend: Backend,
}

impl Enhancer {
    pub fn new(cfg: EngineConfig, backend: Backend) -> Result<Self> {
        cfg.validate()?;
        let frontend = Frontend::new(cfg.frontend.clone())?;
        Ok(Self {
            cfg,
            frontend,
            backend,
        })
    }

    /// Passthrough engine that needs no weights.
    pub fn identity(cfg: EngineConfig) -> Result<Self> {
        Self::new(cfg, Backend::Identity)
    }

    /// Build the network from `src` and wrap it.
    pub fn with_params(cfg: EngineConfig, src: &mut dyn crate::nn::ParamSource) -> Result<Self> {
        cfg.validate()?;
        let net = SfNet::build(&cfg.arch, cfg.bands.band_bins(), src)?;
        Self::new(cfg, Backend::Network(Arc::new(net)))
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Compressed low-band estimate for a compressed low-band spectrogram.
    pub fn dslb_forward(&self, lb: &Spectrogram) -> Result<Spectrogram> {
        match &self.backend {
            Backend::Identity => dslb(&mut IdentityStage, lb),
            Backend::Network(net) => dslb(&mut OfflineStage(net), lb),
        }
    }

    fn check_input(&self, noisy: &Waveform) -> Result<()> {
        if noisy.sample_rate() != SAMPLE_RATE {
            return Err(Error::Config(format!(
                "expected {SAMPLE_RATE} Hz audio, got {} Hz",
                noisy.sample_rate()
            )));
        }
        Ok(())
    }

    pub fn trace(&self, noisy: &Waveform) -> Result<BandTrace> {
        self.check_input(noisy)?;
        let spec = compress(&self.frontend.stft(noisy)?, self.cfg.frontend.beta)?;
        let bands = split_bands(&spec, &self.cfg.bands)?;
        let estimate = match &self.backend {
            Backend::Identity => run_bands(&mut IdentityStage, &bands)?,
            Backend::Network(net) => run_bands(&mut OfflineStage(net), &bands)?,
        };
        Ok(BandTrace {
            noisy: bands,
            estimate,
        })
    }

    /// Offline enhancement; the output has the input's length.
    pub fn enhance(&self, noisy: &Waveform) -> Result<Waveform> {
        let trace = self.trace(noisy)?;
        let fused = fuse_bands(&trace.estimate, &self.cfg.bands)?;
        let linear = decompress(&fused, self.cfg.frontend.beta)?;
        let mut samples = self.frontend.istft(&linear)?.into_samples();
        samples.truncate(noisy.len());
        Waveform::new(samples, SAMPLE_RATE)
    }

    pub fn create_stream(&self) -> EnhancerStream {
        EnhancerStream::new(self.clone())
    }
}

/// Chunked real-time enhancement.
///
/// Samples go in in chunks of any size. After `n` input samples in total,
/// exactly `n - 960` output samples (or none) have been emitted, aligned with
/// the input: output sample `k` is the offline result at sample `k`.
/// [`EnhancerStream::flush`] emits the rest.
pub struct EnhancerStream {
    engine: Enhancer,
    state: Option<SfNetState>,
    /// Current analysis window, starting with the left pad.
    window: Vec<f64>,
    /// Second half of the previous frame's grain.
    tail: Vec<f64>,
    /// Completed samples not yet emitted.
    ready: Vec<f64>,
    frames: usize,
    received: usize,
    emitted: usize,
    closed: bool,
}

impl EnhancerStream {
    fn new(engine: Enhancer) -> Self {
        let cfg = &engine.cfg.frontend;
        let state = match &engine.backend {
            Backend::Identity => None,
            Backend::Network(net) => Some(net.init_state()),
        };
        Self {
            window: vec![0.0; cfg.left_pad()],
            tail: vec![0.0; cfg.hop],
            ready: Vec::new(),
            frames: 0,
            received: 0,
            emitted: 0,
            closed: false,
            state,
            engine,
        }
    }

    /// Samples emitted so far lag the input by this many samples.
    pub fn latency(&self) -> usize {
        self.engine.cfg.frontend.window_len
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn process_frame(&mut self) -> Result<()> {
        let cfg = self.engine.cfg.clone();
        let hop = cfg.frontend.hop;
        let fe = &self.engine.frontend;
        let spec = Spectrogram::new(
            1,
            cfg.frontend.bins(),
            fe.analyze_frame(&self.window[..cfg.frontend.window_len]),
            cfg.frontend.bin_hz(),
            false,
        )?;
        let bands = split_bands(&compress(&spec, cfg.frontend.beta)?, &cfg.bands)?;
        let est = match (&self.engine.backend, &mut self.state) {
            (Backend::Network(net), Some(state)) => {
                run_bands(&mut StreamingStage { net, state }, &bands)?
            }
            _ => run_bands(&mut IdentityStage, &bands)?,
        };
        let fused = decompress(&fuse_bands(&est, &cfg.bands)?, cfg.frontend.beta)?;
        let grain = fe.synthesize_frame(fused.frame(0));
        let norm = fe.overlap_norm();
        if self.frames > 0 {
            self.ready.extend((0..hop).map(|i| {
                let acc = self.tail[i] + grain[i];
                if norm[i] < 1e-8 {
                    0.0
                } else {
                    acc / norm[i]
                }
            }));
        }
        for (t, &g) in self.tail.iter_mut().zip(&grain[hop..]) {
            *t = 0.0 + g;
        }
        self.window.drain(..hop);
        self.frames += 1;
        Ok(())
    }

    fn push(&mut self, samples: &[f64]) -> Result<()> {
        let win = self.engine.cfg.frontend.window_len;
        for chunk in samples.chunks(self.engine.cfg.frontend.hop) {
            self.window.extend_from_slice(chunk);
            while self.window.len() >= win {
                self.process_frame()?;
            }
        }
        Ok(())
    }

    fn take(&mut self, upto: usize) -> Vec<f64> {
        let n = upto.saturating_sub(self.emitted).min(self.ready.len());
        self.emitted += n;
        self.ready.drain(..n).collect()
    }

    fn check_open(&self) -> Result<()> {
        if self.closed {
            return Err(Error::State("stream has been flushed and closed".into()));
        }
        Ok(())
    }

    /// Feed a chunk and receive every sample that is now due.
    pub fn process_samples(&mut self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_open()?;
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite input sample {bad}")));
        }
        self.push(samples)?;
        self.received += samples.len();
        Ok(self.take(self.received.saturating_sub(self.latency())))
    }

    /// Finish the stream: zero-pad the last frames and emit the remaining
    /// samples. The stream cannot be used afterwards.
    pub fn flush(&mut self) -> Result<Vec<f64>> {
        self.check_open()?;
        self.closed = true;
        let cfg = self.engine.cfg.frontend.clone();
        let total_frames = cfg.frames_for(self.received);
        while self.frames < total_frames {
            let missing = cfg.window_len - self.window.len();
            self.window.extend(std::iter::repeat_n(0.0, missing));
            self.process_frame()?;
        }
        Ok(self.take(self.received))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testutil::RandomParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(), SAMPLE_RATE).unwrap()
    }

    fn small_cfg() -> EngineConfig {
        let mut cfg = EngineConfig::default();
        cfg.arch.dslb_channels = 8;
        cfg.arch.sub_channels = 6;
        cfg.arch.tcm_hidden = 8;
        cfg
    }

    fn small_engine(seed: u64) -> Enhancer {
        Enhancer::with_params(small_cfg(), &mut RandomParams::new(seed)).unwrap()
    }

    fn run_stream(e: &Enhancer, x: &[f64], chunk: usize) -> Vec<f64> {
        let mut s = e.create_stream();
        let mut out = Vec::new();
        for c in x.chunks(chunk) {
            out.extend(s.process_samples(c).unwrap());
        }
        out.extend(s.flush().unwrap());
        out
    }

    #[test]
    fn identity_offline_is_passthrough() {
        let x = noise(9600 + 123, 1);
        let y = Enhancer::identity(EngineConfig::default()).unwrap().enhance(&x).unwrap();
        assert_eq!(y.len(), x.len());
        let err = x
            .samples()
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn stream_emits_fixed_latency_and_full_length() {
        let e = Enhancer::identity(EngineConfig::default()).unwrap();
        let mut s = e.create_stream();
        assert_eq!(s.process_samples(&[0.1; 500]).unwrap().len(), 0);
        assert_eq!(s.process_samples(&[0.1; 500]).unwrap().len(), 40);
        assert_eq!(s.process_samples(&[0.1; 7]).unwrap().len(), 7);
        assert_eq!(s.flush().unwrap().len(), 960);
        assert!(matches!(s.process_samples(&[0.0]), Err(Error::State(_))));
        assert!(matches!(s.flush(), Err(Error::State(_))));
    }

    #[test]
    fn stream_matches_offline_with_network() {
        let e = small_engine(3);
        let x = noise(4800 + 77, 4);
        let offline = e.enhance(&x).unwrap();
        for chunk in [1, 333, 4800] {
            let y = run_stream(&e, x.samples(), chunk);
            assert_eq!(y.len(), x.len());
            assert_eq!(y.as_slice(), offline.samples(), "chunk {chunk}");
        }
    }

    #[test]
    fn zero_input_gives_small_output() {
        let e = small_engine(5);
        let y = e.enhance(&Waveform::new(vec![0.0; 4800], SAMPLE_RATE).unwrap()).unwrap();
        let rms = (y.samples().iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt();
        assert!(rms < 1e-3, "{rms}");
    }

    #[test]
    fn empty_stream_flushes_nothing() {
        let mut s = small_engine(1).create_stream();
        assert!(s.process_samples(&[]).unwrap().is_empty());
        assert!(s.flush().unwrap().is_empty());
    }

    #[test]
    fn rejects_non_finite_chunk() {
        let mut s = small_engine(1).create_stream();
        assert!(matches!(s.process_samples(&[f64::NAN]), Err(Error::Data(_))));
    }
}
