//! Per-standard generator configuration behind one dispatch point.

use serde::{Deserialize, Serialize};

use crate::gsm::{self, GsmConfig};
use crate::ofdm::{self, OfdmConfig, OfdmStandard};
use crate::umts::{self, UmtsConfig};
use crate::{Error, IqBuffer, Result, Rng, Standard};

/// Where payload bits come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "bits")]
pub enum Payload {
    #[default]
    Random,
    Bits(Vec<u8>),
}

impl Payload {
    /// `n` bits, drawn from `rng` or taken verbatim.
    pub fn take(&self, n: usize, rng: &mut Rng) -> Result<Vec<u8>> {
        match self {
            Payload::Random => Ok(rng.bits(n)),
            Payload::Bits(b) if b.len() == n => {
                if b.iter().any(|&x| x > 1) {
                    return Err(Error::invalid("payload bits must be 0 or 1"));
                }
                Ok(b.clone())
            }
            Payload::Bits(b) => Err(Error::LengthMismatch {
                expected: n,
                actual: b.len(),
            }),
        }
    }
}

/// Generator settings for one source; serialized with a `standard` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Tagged", into = "Tagged")]
pub enum WaveformConfig {
    Gsm(GsmConfig),
    Umts(UmtsConfig),
    Lte(OfdmConfig),
    Nr(OfdmConfig),
}

// The OFDM config's own `standard` field is not serialized; the tag decides it.
#[derive(Serialize, Deserialize)]
#[serde(tag = "standard", rename_all = "lowercase")]
enum Tagged {
    Gsm(GsmConfig),
    Umts(UmtsConfig),
    Lte(OfdmConfig),
    Nr(OfdmConfig),
}

impl From<Tagged> for WaveformConfig {
    fn from(t: Tagged) -> Self {
        match t {
            Tagged::Gsm(c) => WaveformConfig::Gsm(c),
            Tagged::Umts(c) => WaveformConfig::Umts(c),
            Tagged::Lte(c) => WaveformConfig::Lte(c.with_standard(OfdmStandard::Lte)),
            Tagged::Nr(c) => WaveformConfig::Nr(c.with_standard(OfdmStandard::Nr)),
        }
    }
}

impl From<WaveformConfig> for Tagged {
    fn from(w: WaveformConfig) -> Self {
        match w {
            WaveformConfig::Gsm(c) => Tagged::Gsm(c),
            WaveformConfig::Umts(c) => Tagged::Umts(c),
            WaveformConfig::Lte(c) => Tagged::Lte(c),
            WaveformConfig::Nr(c) => Tagged::Nr(c),
        }
    }
}

impl WaveformConfig {
    pub fn default_for(standard: Standard) -> Self {
        match standard {
            Standard::Gsm => WaveformConfig::Gsm(GsmConfig::default()),
            Standard::Umts => WaveformConfig::Umts(UmtsConfig::default()),
            Standard::Lte => WaveformConfig::Lte(OfdmConfig::lte_default()),
            Standard::Nr => WaveformConfig::Nr(OfdmConfig::nr_default()),
        }
    }

    pub fn standard(&self) -> Standard {
        match self {
            WaveformConfig::Gsm(_) => Standard::Gsm,
            WaveformConfig::Umts(_) => Standard::Umts,
            WaveformConfig::Lte(_) => Standard::Lte,
            WaveformConfig::Nr(_) => Standard::Nr,
        }
    }

    pub fn sample_rate_hz(&self) -> Result<f64> {
        match self {
            WaveformConfig::Gsm(c) => Ok(c.sample_rate_hz()),
            WaveformConfig::Umts(c) => Ok(c.sample_rate_hz()),
            WaveformConfig::Lte(c) | WaveformConfig::Nr(c) => c.sample_rate_hz(),
        }
    }

    /// Duration of the signal this config produces.
    pub fn duration_s(&self) -> Result<f64> {
        match self {
            WaveformConfig::Gsm(c) => Ok(c.duration_s()),
            WaveformConfig::Umts(c) => Ok(c.duration_chips as f64 / umts::CHIP_RATE_HZ),
            WaveformConfig::Lte(c) | WaveformConfig::Nr(c) => c.duration_s(),
        }
    }

    /// Smallest length setting that covers at least `duration_s`.
    pub fn covering(&self, duration_s: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            WaveformConfig::Gsm(c) => {
                c.n_bursts = (duration_s / gsm::TIMESLOT_S).ceil().max(1.0) as usize;
            }
            WaveformConfig::Umts(c) => {
                c.duration_chips = (duration_s * umts::CHIP_RATE_HZ).ceil().max(1.0) as usize;
            }
            WaveformConfig::Lte(c) | WaveformConfig::Nr(c) => {
                let slot = c.slot_duration_s()?;
                c.n_slots = (duration_s / slot - 1e-9).ceil().max(1.0) as usize;
            }
        }
        Ok(out)
    }

    pub fn generate(&self, rng: &Rng) -> Result<IqBuffer> {
        match self {
            WaveformConfig::Gsm(c) => gsm::generate_gsm(c, rng),
            WaveformConfig::Umts(c) => umts::generate_umts(c, rng),
            WaveformConfig::Lte(c) => ofdm::generate_lte(c, rng),
            WaveformConfig::Nr(c) => ofdm::generate_nr(c, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_keeps_standard() {
        for s in Standard::ALL {
            let cfg = WaveformConfig::default_for(s);
            let text = serde_json::to_string(&cfg).unwrap();
            assert!(text.contains(&format!("\"standard\":\"{}\"", s.name())), "{text}");
            let back: WaveformConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn covering_reaches_duration() {
        for s in Standard::ALL {
            let cfg = WaveformConfig::default_for(s).covering(2.3e-3).unwrap();
            let d = cfg.duration_s().unwrap();
            assert!(d >= 2.3e-3 - 1e-12, "{s}: {d}");
        }
    }

    #[test]
    fn generated_length_matches_declared_duration() {
        let rng = Rng::new(4);
        for s in Standard::ALL {
            let cfg = WaveformConfig::default_for(s);
            let x = cfg.generate(&rng).unwrap();
            assert_eq!(x.label, Some(s));
            let want = cfg.duration_s().unwrap() * cfg.sample_rate_hz().unwrap();
            assert!((x.len() as f64 - want).abs() < 1.0, "{s}: {} vs {want}", x.len());
        }
    }
}
