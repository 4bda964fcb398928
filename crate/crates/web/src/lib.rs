//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every entry point is deterministic in its seed and returns plain
//! numeric arrays so the page can draw them on a canvas.

use rfmix_core::channel::{fading_process, mix_sources, FadingSpec, MixEntry, MixParams, SourcePlacement};
use rfmix_core::metrics::{occupied_bandwidth_of, papr_db, psd_welch, segment_for, stft_spectrogram};
use rfmix_core::ofdm::OfdmConfig;
use rfmix_core::{Rng, Standard, WaveformConfig};
use wasm_bindgen::prelude::*;

fn js(e: rfmix_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Power spectral density of one generated waveform.
#[wasm_bindgen]
pub struct Psd {
    freqs_hz: Vec<f64>,
    density_db: Vec<f64>,
    papr_db: f64,
    obw_hz: f64,
}

#[wasm_bindgen]
impl Psd {
    #[wasm_bindgen(getter)]
    pub fn freqs_hz(&self) -> Vec<f64> {
        self.freqs_hz.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn density_db(&self) -> Vec<f64> {
        self.density_db.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn papr_db(&self) -> f64 {
        self.papr_db
    }

    #[wasm_bindgen(getter)]
    pub fn obw_hz(&self) -> f64 {
        self.obw_hz
    }
}

/// Welch PSD, PAPR and 99% occupied bandwidth of a default-configured
/// `standard` ("gsm", "umts", "lte" or "nr") lasting `duration_ms`.
#[wasm_bindgen]
pub fn waveform_psd(standard: &str, duration_ms: f64, seed: u64) -> Result<Psd, JsError> {
    let s: Standard = standard.parse().map_err(js)?;
    let buf = WaveformConfig::default_for(s)
        .covering(duration_ms * 1e-3)
        .and_then(|c| c.generate(&Rng::new(seed)))
        .map_err(js)?;
    let spec = psd_welch(&buf, segment_for(buf.len()), 0.5).map_err(js)?;
    Ok(Psd {
        obw_hz: occupied_bandwidth_of(&spec, 0.99).map_err(js)?,
        papr_db: papr_db(&buf).map_err(js)?,
        density_db: spec.density.iter().map(|p| 10.0 * p.max(1e-30).log10()).collect(),
        freqs_hz: spec.freqs_hz,
    })
}

/// Row-major dB magnitudes, `n_frames x n_bins`, lowest frequency first.
#[wasm_bindgen]
pub struct SpectrogramView {
    n_frames: usize,
    n_bins: usize,
    sample_rate_hz: f64,
    db: Vec<f64>,
}

#[wasm_bindgen]
impl SpectrogramView {
    #[wasm_bindgen(getter)]
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    #[wasm_bindgen(getter)]
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    #[wasm_bindgen(getter)]
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    #[wasm_bindgen(getter)]
    pub fn db(&self) -> Vec<f64> {
        self.db.clone()
    }
}

pub const COEXIST_RATE_HZ: f64 = 15.36e6;

/// A GSM carrier and a 5 MHz LTE carrier sharing one 15.36 MHz band.
/// Offsets are relative to the band centre; the GSM power is relative to LTE.
#[wasm_bindgen]
pub fn coexistence(
    gsm_offset_hz: f64,
    lte_offset_hz: f64,
    gsm_power_db: f64,
    snr_db: f64,
    seed: u64,
) -> Result<SpectrogramView, JsError> {
    let duration_s = 4e-3;
    let rng = Rng::new(seed);
    let lte = WaveformConfig::Lte(OfdmConfig {
        bandwidth_hz: 5e6,
        ..OfdmConfig::lte_default()
    });
    let sources = [
        (WaveformConfig::default_for(Standard::Gsm), gsm_offset_hz, gsm_power_db),
        (lte, lte_offset_hz, 0.0),
    ];
    let entries = sources
        .into_iter()
        .enumerate()
        .map(|(i, (cfg, offset, power))| {
            let source = cfg.covering(duration_s)?.generate(&rng.fork(100 + i as u64))?;
            Ok(MixEntry {
                source,
                placement: SourcePlacement {
                    power_db: power,
                    delay_s: 0.0,
                    freq_offset_hz: offset,
                },
                channel: None,
            })
        })
        .collect::<rfmix_core::Result<Vec<_>>>()
        .map_err(js)?;
    let params = MixParams {
        common_rate_hz: COEXIST_RATE_HZ,
        n_samples: Some((duration_s * COEXIST_RATE_HZ) as usize),
        noise_snr_db: Some(snr_db),
    };
    let mix = mix_sources(&entries, &params, &rng).map_err(js)?;
    let sg = stft_spectrogram(&mix.mixture, 256, 256).map_err(js)?;
    Ok(SpectrogramView {
        n_frames: sg.n_frames,
        n_bins: sg.n_bins,
        sample_rate_hz: sg.sample_rate_hz,
        db: sg.to_db(),
    })
}

/// Envelope in dB of `n` samples of a fading process at 100 kHz. A finite
/// `k_factor_db` adds a line-of-sight component.
#[wasm_bindgen]
pub fn fading_envelope(doppler_hz: f64, k_factor_db: Option<f64>, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let spec = match k_factor_db {
        Some(k) => FadingSpec::rician(k, doppler_hz),
        None => FadingSpec::rayleigh(doppler_hz),
    };
    let g = fading_process(&spec, n, 100e3, &Rng::new(seed)).map_err(js)?;
    Ok(g.iter().map(|z| 20.0 * z.norm().max(1e-12).log10()).collect())
}
