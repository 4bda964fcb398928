//! Single-threaded generation throughput per standard.

use std::time::Instant;

use rfmix_core::{Rng, Standard, WaveformConfig};
use serde::{Deserialize, Serialize};

use crate::dataset::ThroughputRow;
use crate::error::{HarnessError, Result};
use crate::scenario::GenerationStat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Signal length per generator call.
    pub duration_s: f64,
    /// Keep repeating until this much wall time has been spent.
    pub min_wall_s: f64,
    pub min_repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            duration_s: 10e-3,
            min_wall_s: 0.5,
            min_repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub standards: Vec<ThroughputRow>,
}

impl BenchReport {
    pub fn row(&self, s: Standard) -> Option<&ThroughputRow> {
        self.standards.iter().find(|r| r.standard == s)
    }

    /// True when real-time multiples strictly decrease in `order`.
    pub fn is_ordered(&self, order: &[Standard]) -> bool {
        let m: Option<Vec<f64>> = order.iter().map(|s| self.row(*s).map(|r| r.realtime_multiple)).collect();
        m.is_some_and(|m| m.windows(2).all(|w| w[0] > w[1]))
    }

    /// Standards that fell more than `max_drop` (a fraction) below the
    /// baseline's real-time multiple.
    pub fn regressions(&self, baseline: &BenchReport, max_drop: f64) -> Vec<String> {
        self.standards
            .iter()
            .filter_map(|r| {
                let b = baseline.row(r.standard)?;
                let floor = b.realtime_multiple * (1.0 - max_drop);
                (r.realtime_multiple < floor).then(|| {
                    format!(
                        "{}: {:.3}x real time, baseline {:.3}x",
                        r.standard, r.realtime_multiple, b.realtime_multiple
                    )
                })
            })
            .collect()
    }
}

/// Times repeated generation of `waveform`, stretched to the configured
/// duration, with a fresh seed per call.
pub fn bench_waveform(waveform: &WaveformConfig, cfg: &BenchConfig) -> Result<ThroughputRow> {
    if !(cfg.duration_s > 0.0 && cfg.min_wall_s >= 0.0) {
        return Err(HarnessError::validation("bench needs duration_s > 0 and min_wall_s >= 0"));
    }
    let wf = waveform.covering(cfg.duration_s)?;
    let rng = Rng::new(cfg.seed);
    // one untimed call so allocation and FFT planning do not count
    wf.generate(&rng.fork(u64::MAX))?;
    let mut stats = Vec::new();
    let mut spent = 0.0;
    let mut k = 0;
    while k < cfg.min_repeats.max(1) || spent < cfg.min_wall_s {
        let t0 = Instant::now();
        let buf = wf.generate(&rng.fork(k as u64))?;
        let wall_s = t0.elapsed().as_secs_f64();
        spent += wall_s;
        stats.push(GenerationStat {
            standard: wf.standard(),
            n_samples: buf.len(),
            signal_s: buf.duration_s(),
            wall_s,
        });
        k += 1;
    }
    Ok(ThroughputRow::from_stats(wf.standard(), &stats))
}

/// Default configuration of every standard, one after another.
pub fn bench_standards(cfg: &BenchConfig) -> Result<BenchReport> {
    let standards = Standard::ALL
        .into_iter()
        .map(|s| bench_waveform(&WaveformConfig::default_for(s), cfg))
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        config: cfg.clone(),
        standards,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(standard: Standard, x: f64) -> ThroughputRow {
        ThroughputRow {
            standard,
            n_sources: 1,
            n_samples: 1,
            signal_s: x,
            wall_s: 1.0,
            samples_per_s: 1.0,
            realtime_multiple: x,
        }
    }

    #[test]
    fn ordering_and_regressions() {
        let report = BenchReport {
            config: BenchConfig::default(),
            standards: vec![row(Standard::Gsm, 10.0), row(Standard::Lte, 2.0)],
        };
        assert!(report.is_ordered(&[Standard::Gsm, Standard::Lte]));
        assert!(!report.is_ordered(&[Standard::Lte, Standard::Gsm]));
        assert!(!report.is_ordered(&[Standard::Gsm, Standard::Nr]));
        let baseline = BenchReport {
            config: BenchConfig::default(),
            standards: vec![row(Standard::Gsm, 20.0), row(Standard::Lte, 2.1)],
        };
        let r = report.regressions(&baseline, 0.2);
        assert_eq!(r.len(), 1);
        assert!(r[0].starts_with("gsm"));
    }

    #[test]
    fn bench_counts_every_call() {
        let cfg = BenchConfig {
            duration_s: 1e-3,
            min_wall_s: 0.0,
            min_repeats: 2,
            seed: 3,
        };
        let r = bench_waveform(&WaveformConfig::default_for(Standard::Gsm), &cfg).unwrap();
        assert_eq!(r.n_sources, 2);
        assert!(r.realtime_multiple > 0.0 && r.signal_s >= 2e-3);
    }
}
