//! Declarative scenarios: which sources, through which channels, mixed how.

use std::time::Instant;

use rfmix_core::channel::{
    awgn, propagate_source, standard_profile, sum_components, ChannelSpec, DelayProfile, FadingSpec,
    MixEntry, ProfileName, SourcePlacement,
};
use rfmix_core::metrics::{occupied_bandwidth, papr_db};
use rfmix_core::mimo::{apply_mimo, draw_mimo_channel, MimoConfig};
use rfmix_core::signal::{linear_to_db, mean_power};
use rfmix_core::{Complex64, IqBuffer, Rng, Standard, WaveformConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const MAX_SOURCES: usize = 4;
pub const MIN_DURATION_S: f64 = 1e-3;
pub const MAX_DURATION_S: f64 = 10e-3;

/// A standard ITU profile by name, or explicit taps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileRef {
    Named(ProfileName),
    Custom(DelayProfile),
}

impl ProfileRef {
    pub fn resolve(&self) -> rfmix_core::Result<DelayProfile> {
        match self {
            ProfileRef::Named(n) => standard_profile(*n),
            ProfileRef::Custom(p) => {
                p.validate()?;
                Ok(p.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub placement: SourcePlacement,
    /// Absent together with `fading` for an ideal link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fading: Option<FadingSpec>,
}

impl SourceSpec {
    pub fn new(waveform: WaveformConfig) -> Self {
        SourceSpec {
            waveform,
            placement: SourcePlacement::default(),
            profile: None,
            fading: None,
        }
    }

    pub fn standard(&self) -> Standard {
        self.waveform.standard()
    }

    /// A profile without fading gets the default fading; fading without a
    /// profile runs over a single tap.
    pub fn channel(&self) -> rfmix_core::Result<Option<ChannelSpec>> {
        if self.profile.is_none() && self.fading.is_none() {
            return Ok(None);
        }
        let profile = match &self.profile {
            Some(p) => p.resolve()?,
            None => DelayProfile::flat(),
        };
        Ok(Some(ChannelSpec {
            profile,
            fading: self.fading.unwrap_or_default(),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub duration_s: f64,
    pub common_rate_hz: f64,
    pub sources: Vec<SourceSpec>,
    /// SNR against the clean mixture; absent for a noiseless sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_snr_db: Option<f64>,
    /// Spatial channel with one transmit antenna per source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mimo: Option<MimoConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Lifts the 1-10 ms duration window.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_any_duration: bool,
}

impl ScenarioSpec {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.common_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let v = |m: String| HarnessError::Validation(m);
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.id.starts_with('.')
        {
            return Err(v(format!(
                "id {:?} must be non-empty and use only letters, digits, '-', '_' or '.'",
                self.id
            )));
        }
        if !(self.common_rate_hz > 0.0 && self.common_rate_hz.is_finite()) {
            return Err(v("common_rate_hz must be positive".into()));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(v("duration_s must be positive".into()));
        }
        if !self.allow_any_duration && !(MIN_DURATION_S..=MAX_DURATION_S).contains(&self.duration_s) {
            return Err(v(format!(
                "duration_s {} is outside [{MIN_DURATION_S}, {MAX_DURATION_S}]; set allow_any_duration to override",
                self.duration_s
            )));
        }
        if self.n_samples() < 2 {
            return Err(v("duration_s * common_rate_hz gives fewer than 2 samples".into()));
        }
        if !(1..=MAX_SOURCES).contains(&self.sources.len()) {
            return Err(v(format!(
                "a scenario takes 1 to {MAX_SOURCES} sources, got {}",
                self.sources.len()
            )));
        }
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(v("noise_snr_db must be finite; omit it for no noise".into()));
            }
        }
        if let Some(m) = &self.mimo {
            if m.n_tx != self.sources.len() {
                return Err(v(format!(
                    "mimo.n_tx is {} but the scenario has {} sources",
                    m.n_tx,
                    self.sources.len()
                )));
            }
            m.validate()?;
        }
        Ok(())
    }
}

/// Compact per-buffer figures stored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub papr_db: f64,
    pub obw_hz: f64,
    pub mean_power_db: f64,
}

impl MetricsSummary {
    pub fn of(buf: &IqBuffer) -> Result<Self> {
        Ok(MetricsSummary {
            papr_db: papr_db(buf)?,
            obw_hz: occupied_bandwidth(buf, 0.99)?,
            mean_power_db: linear_to_db(buf.mean_power()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub mixture: MetricsSummary,
    pub components: Vec<MetricsSummary>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    /// One stream per receive antenna; a single stream without MIMO.
    pub observations: Vec<IqBuffer>,
    /// Each source's noiseless contribution to the first observation.
    pub components: Vec<IqBuffer>,
    pub metrics: ScenarioMetrics,
    pub generation: Vec<GenerationStat>,
}

/// Cost of synthesizing one source at its native rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStat {
    pub standard: Standard,
    pub n_samples: usize,
    pub signal_s: f64,
    pub wall_s: f64,
}

impl ScenarioOutput {
    pub fn mixture(&self) -> &IqBuffer {
        &self.observations[0]
    }
}

fn at_source<T>(index: usize, r: rfmix_core::Result<T>) -> Result<T> {
    r.map_err(|source| HarnessError::Source { index, source })
}

/// Synthesizes, propagates and mixes every source. Source `i` draws its
/// waveform from `fork(100 + i)` and its channel from `fork(i + 1)` of the
/// scenario seed; noise uses `fork(0)`, the MIMO matrix `fork(50)`
/// and antenna noise `fork(51)`.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioOutput> {
    spec.validate()?;
    let rng = Rng::new(spec.seed);
    let fs = spec.common_rate_hz;
    let n = spec.n_samples();
    let mut generation = Vec::with_capacity(spec.sources.len());
    let mut tx = Vec::with_capacity(spec.sources.len());
    for (i, src) in spec.sources.iter().enumerate() {
        let wf = at_source(i, src.waveform.covering(spec.duration_s))?;
        let t0 = Instant::now();
        let source = at_source(i, wf.generate(&rng.fork(100 + i as u64)))?;
        generation.push(GenerationStat {
            standard: src.standard(),
            n_samples: source.len(),
            signal_s: source.duration_s(),
            wall_s: t0.elapsed().as_secs_f64(),
        });
        let entry = MixEntry {
            source,
            placement: src.placement,
            channel: at_source(i, src.channel())?,
        };
        tx.push(at_source(i, propagate_source(&entry, fs, Some(n), &rng.fork(i as u64 + 1)))?);
    }

    let (observations, components) = match &spec.mimo {
        None => {
            let clean = sum_components(&tx, n);
            let samples = match spec.noise_snr_db {
                Some(snr) => {
                    let p = mean_power(&clean);
                    if !(p > 0.0) {
                        return Err(rfmix_core::Error::ZeroPower.into());
                    }
                    let w = awgn(n, p, snr, &rng.fork(0));
                    clean.iter().zip(&w).map(|(x, v)| x + v).collect()
                }
                None => clean,
            };
            (vec![IqBuffer::new(samples, fs)?], tx)
        }
        Some(cfg) => {
            let channel = draw_mimo_channel(cfg, n, fs, &rng.fork(50))?;
            let obs = apply_mimo(&tx, &channel, spec.noise_snr_db, &rng.fork(51))?;
            let at_rx0 = tx
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let samples: Vec<Complex64> = s
                        .samples
                        .iter()
                        .enumerate()
                        .map(|(k, x)| channel.at(k)[(0, j)] * x)
                        .collect();
                    s.map_samples(samples)
                })
                .collect();
            (obs, at_rx0)
        }
    };

    let metrics = ScenarioMetrics {
        mixture: MetricsSummary::of(&observations[0])?,
        components: components
            .iter()
            .enumerate()
            .map(|(i, c)| MetricsSummary::of(c).map_err(|e| annotate(i, e)))
            .collect::<Result<_>>()?,
    };
    Ok(ScenarioOutput {
        observations,
        components,
        metrics,
        generation,
    })
}

fn annotate(index: usize, e: HarnessError) -> HarnessError {
    match e {
        HarnessError::Core(source) => HarnessError::Source { index, source },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gsm_only() -> ScenarioSpec {
        ScenarioSpec {
            id: "gsm".into(),
            duration_s: 2e-3,
            common_rate_hz: 1.0833333333333333e6,
            sources: vec![SourceSpec::new(WaveformConfig::default_for(Standard::Gsm))],
            noise_snr_db: None,
            mimo: None,
            seed: 1,
            allow_any_duration: false,
        }
    }

    #[test]
    fn validation_catches_bad_specs() {
        let ok = gsm_only();
        ok.validate().unwrap();
        let cases: Vec<Box<dyn Fn(&mut ScenarioSpec)>> = vec![
            Box::new(|s| s.id = "../x".into()),
            Box::new(|s| s.duration_s = 20e-3),
            Box::new(|s| s.duration_s = 0.5e-3),
            Box::new(|s| s.common_rate_hz = 0.0),
            Box::new(|s| s.sources.clear()),
            Box::new(|s| s.sources = vec![s.sources[0].clone(); 5]),
            Box::new(|s| s.noise_snr_db = Some(f64::NAN)),
            Box::new(|s| s.mimo = Some(MimoConfig::new(2, 2))),
        ];
        for (k, f) in cases.iter().enumerate() {
            let mut s = ok.clone();
            f(&mut s);
            let e = s.validate().unwrap_err();
            assert_eq!(e.exit_code(), 1, "case {k}: {e}");
        }
        let mut long = ok.clone();
        long.duration_s = 20e-3;
        long.allow_any_duration = true;
        long.validate().unwrap();
    }

    #[test]
    fn profile_accepts_name_or_taps() {
        let named: ProfileRef = serde_json::from_str("\"veh_a\"").unwrap();
        assert_eq!(named, ProfileRef::Named(ProfileName::VehA));
        let taps: ProfileRef =
            serde_json::from_str(r#"{"taps":[{"delay_ns":0,"power_db":0},{"delay_ns":50,"power_db":-3}]}"#)
                .unwrap();
        assert_eq!(taps.resolve().unwrap().taps.len(), 2);
    }

    #[test]
    fn single_gsm_has_low_papr() {
        let out = run_scenario(&gsm_only()).unwrap();
        assert_eq!(out.components.len(), 1);
        assert_eq!(out.observations.len(), 1);
        assert!(out.metrics.mixture.papr_db < 2.0, "{:?}", out.metrics);
        assert_eq!(out.mixture().len(), gsm_only().n_samples());
    }

    #[test]
    fn noiseless_mixture_is_sum_of_components() {
        let mut s = gsm_only();
        s.common_rate_hz = 7.68e6;
        s.sources.push(SourceSpec::new(WaveformConfig::default_for(Standard::Umts)));
        s.sources[1].placement.freq_offset_hz = 2e6;
        let out = run_scenario(&s).unwrap();
        let sum = sum_components(&out.components, out.mixture().len());
        assert_eq!(sum, out.mixture().samples);
    }

    #[test]
    fn errors_name_the_source() {
        let mut s = gsm_only();
        s.sources.push(s.sources[0].clone());
        s.sources[1].placement.freq_offset_hz = 0.9e6;
        match run_scenario(&s).unwrap_err() {
            HarnessError::Source { index, .. } => assert_eq!(index, 1),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn mimo_components_add_up_at_first_antenna() {
        let mut s = gsm_only();
        s.sources.push(s.sources[0].clone());
        s.mimo = Some(MimoConfig::new(2, 3));
        let out = run_scenario(&s).unwrap();
        assert_eq!(out.observations.len(), 3);
        let sum = sum_components(&out.components, out.mixture().len());
        let err = sum
            .iter()
            .zip(&out.mixture().samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn same_seed_same_bytes() {
        let mut s = gsm_only();
        s.noise_snr_db = Some(15.0);
        s.sources[0].profile = Some(ProfileRef::Named(ProfileName::PedA));
        s.sources[0].fading = Some(FadingSpec::rayleigh(50.0));
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.mixture().samples, b.mixture().samples);
        s.seed = 2;
        let c = run_scenario(&s).unwrap();
        assert_ne!(a.mixture().samples, c.mixture().samples);
    }
}
