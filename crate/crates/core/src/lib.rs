//! Baseband synthesis and analysis for mixed 2G/3G/4G/5G cellular scenarios.
//!
//! The crate is organized around [`IqBuffer`], a uniformly sampled complex
//! baseband signal. Waveform generators ([`gsm`], [`umts`], [`ofdm`]) produce
//! buffers, [`channel`] and [`mimo`] propagate and mix them, [`metrics`]
//! scores them, and [`separation`] runs classical blind source separation
//! baselines against the mixtures.

pub mod channel;
pub mod error;
pub mod filter;
pub mod gsm;
pub mod metrics;
pub mod mimo;
pub mod ofdm;
pub mod resample;
pub mod rng;
pub mod separation;
pub mod signal;
pub mod umts;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::Rng;
pub use signal::{IqBuffer, Standard};
pub use waveform::WaveformConfig;
