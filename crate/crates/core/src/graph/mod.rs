//! SF-Net: the dual-stream low-band network (ME-Net magnitude gain plus
//! CP-Net complex residual), the guided middle/high-band maskers and the
//! full-band enhancement pipeline around them.
//!
//! Per frame, the compressed spectrum is split into three overlapping
//! 161-bin bands. The low band gets a gain on its magnitude (noisy phase
//! kept) plus a complex residual. The middle band is masked using the
//! estimated low-band magnitude as a guide, the high band using both lower
//! estimates. The three estimates are fused, decompressed and overlap-added.

mod bench;
mod config;
mod enhancer;
mod nets;
mod unet;

pub use bench::{bench_stream, BenchReport};
pub use config::{ArchConfig, EngineConfig, DEPTH};
pub use enhancer::{Backend, BandTrace, Enhancer, EnhancerStream};
pub use nets::{CpNet, CpState, MeNet, MeState, SfNet, SfNetState, SubBandNet, SubBandState};
pub use unet::Interaction;
