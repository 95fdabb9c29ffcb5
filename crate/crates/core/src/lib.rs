//! Real-time full-band (48 kHz) speech enhancement by sub-band fusion.
//!
//! The pipeline: [`frontend`] turns audio into compressed spectra,
//! [`bands`] splits and fuses them, [`graph`] runs the networks built from
//! [`nn`] layers, [`weights`] stores parameters and [`metrics`] scores the
//! results.

pub mod bands;
pub mod error;
pub mod frontend;
pub mod graph;
pub mod metrics;
pub mod nn;
pub mod weights;

pub use error::{Error, Result, WeightsError};
pub use frontend::{FrontendConfig, Spectrogram, Waveform, SAMPLE_RATE};
pub use graph::{ArchConfig, Backend, EngineConfig, Enhancer, EnhancerStream};
