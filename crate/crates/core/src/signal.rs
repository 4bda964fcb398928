//! Complex baseband buffers and the elementwise operations on them.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Standard {
    Gsm,
    Umts,
    Lte,
    Nr,
}

impl Standard {
    pub const ALL: [Standard; 4] = [Standard::Gsm, Standard::Umts, Standard::Lte, Standard::Nr];

    pub fn name(self) -> &'static str {
        match self {
            Standard::Gsm => "gsm",
            Standard::Umts => "umts",
            Standard::Lte => "lte",
            Standard::Nr => "nr",
        }
    }
}

impl fmt::Display for Standard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Standard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gsm" | "2g" => Ok(Standard::Gsm),
            "umts" | "wcdma" | "3g" => Ok(Standard::Umts),
            "lte" | "4g" => Ok(Standard::Lte),
            "nr" | "5g" | "5gnr" => Ok(Standard::Nr),
            other => Err(Error::invalid(format!("unknown standard '{other}'"))),
        }
    }
}

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub label: Option<Standard>,
    pub seed: u64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(IqBuffer {
            samples,
            sample_rate_hz,
            label: None,
            seed: 0,
        })
    }

    pub fn with_label(mut self, label: Standard, seed: u64) -> Self {
        self.label = Some(label);
        self.seed = seed;
        self
    }

    /// A buffer with the same rate and metadata but new samples.
    pub fn map_samples(&self, samples: Vec<Complex64>) -> IqBuffer {
        IqBuffer {
            samples,
            sample_rate_hz: self.sample_rate_hz,
            label: self.label,
            seed: self.seed,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, gain: Complex64) -> IqBuffer {
        self.map_samples(self.samples.iter().map(|&z| z * gain).collect())
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Mixes the buffer by `exp(j 2 pi offset n / fs)`.
pub fn frequency_shift(buf: &IqBuffer, offset_hz: f64) -> Result<IqBuffer> {
    let fs = buf.sample_rate_hz;
    if !offset_hz.is_finite() || offset_hz.abs() >= fs / 2.0 {
        return Err(Error::Aliasing {
            offset_hz,
            sample_rate_hz: fs,
        });
    }
    if offset_hz == 0.0 {
        return Ok(buf.clone());
    }
    let cycles_per_sample = offset_hz / fs;
    let samples = buf
        .samples
        .iter()
        .enumerate()
        .map(|(n, &z)| {
            // keep the phase argument small so long buffers stay accurate
            let turns = (cycles_per_sample * n as f64).fract();
            z * Complex64::from_polar(1.0, 2.0 * PI * turns)
        })
        .collect();
    Ok(buf.map_samples(samples))
}

/// Scales the buffer to a mean power of `target_db` (dB relative to unit power).
pub fn normalize_power(buf: &IqBuffer, target_db: f64) -> Result<IqBuffer> {
    let p = buf.mean_power();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::ZeroPower);
    }
    let target = 10f64.powf(target_db / 10.0);
    let g = (target / p).sqrt();
    Ok(buf.map_samples(buf.samples.iter().map(|&z| z * g).collect()))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;
    use proptest::prelude::*;

    fn noise(n: usize, seed: u64, fs: f64) -> IqBuffer {
        let mut r = Rng::new(seed);
        IqBuffer::new((0..n).map(|_| r.complex_normal()).collect(), fs).unwrap()
    }

    fn peak_bin(x: &[Complex64]) -> usize {
        use rustfft::FftPlanner;
        let mut v = x.to_vec();
        FftPlanner::new().plan_fft_forward(v.len()).process(&mut v);
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0
    }

    #[test]
    fn rejects_nonpositive_rate() {
        assert!(IqBuffer::new(vec![], 0.0).is_err());
        assert!(IqBuffer::new(vec![], -1.0).is_err());
    }

    #[test]
    fn zero_shift_is_identity() {
        let b = noise(100, 1, 1e6);
        assert_eq!(frequency_shift(&b, 0.0).unwrap(), b);
    }

    #[test]
    fn shift_moves_tone_peak() {
        let fs = 4096.0;
        let n = 4096;
        let f0 = 300.0;
        let tone: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f0 * k as f64 / fs))
            .collect();
        let b = IqBuffer::new(tone, fs).unwrap();
        let s = frequency_shift(&b, 125.0).unwrap();
        let bin = peak_bin(&s.samples);
        assert!((bin as i64 - 425).abs() <= 1, "bin {bin}");
    }

    #[test]
    fn shift_preserves_power() {
        let b = noise(5000, 2, 1e6);
        let s = frequency_shift(&b, 123_456.0).unwrap();
        assert!((s.mean_power() / b.mean_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_at_nyquist_is_aliasing() {
        let b = noise(10, 2, 1e6);
        assert!(matches!(
            frequency_shift(&b, 5e5),
            Err(Error::Aliasing { .. })
        ));
        assert!(frequency_shift(&b, -6e5).is_err());
    }

    #[test]
    fn normalize_targets() {
        let b = noise(1000, 3, 1.0);
        let n0 = normalize_power(&b, 0.0).unwrap();
        assert!((n0.mean_power() - 1.0).abs() < 1e-9);
        let n10 = normalize_power(&b, -10.0).unwrap();
        assert!((n10.mean_power() - 0.1).abs() < 1e-9);
        let again = normalize_power(&n10, -10.0).unwrap();
        let err = again
            .samples
            .iter()
            .zip(&n10.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn normalize_zero_power_fails() {
        let b = IqBuffer::new(vec![Complex64::new(0.0, 0.0); 8], 1.0).unwrap();
        assert_eq!(normalize_power(&b, 0.0), Err(Error::ZeroPower));
    }

    proptest! {
        #[test]
        fn shift_round_trip(seed in 0u64..1000, f in -0.49f64..0.49) {
            let b = noise(2048, seed, 1e6);
            let s = frequency_shift(&b, f * 1e6).unwrap();
            let back = frequency_shift(&s, -f * 1e6).unwrap();
            let err = back.samples.iter().zip(&b.samples)
                .map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-9);
        }
    }
}
