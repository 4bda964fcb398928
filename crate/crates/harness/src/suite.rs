//! Separation runs: one stored sample, or the seeded evaluation suite
//! spread across threads.

use std::time::Instant;

use rayon::prelude::*;
use rfmix_core::metrics::{sinr_improvement, SinrScore};
use rfmix_core::rng::derive_seed;
use rfmix_core::separation::{
    build_scenario, fastica_separate, format_table, nmf_separate, nmf_separate_oracle, non_increasing, score_method, summarize,
    IcaParams, Method, NmfParams, SuiteConfig, TableRow,
};
use rfmix_core::IqBuffer;
use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::error::{HarnessError, Result};

/// Allowed relative rise between successive NMF divergence values.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    /// Components in construction order, `components_per_source` each.
    #[default]
    Sequential,
    /// Components assigned by correlation with the stored components.
    Oracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSeparation {
    pub method: Method,
    pub score: SinrScore,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_monotone: Option<bool>,
    #[serde(skip)]
    pub estimates: Vec<IqBuffer>,
}

/// Separates a stored sample into as many estimates as it has sources and
/// scores them against its components. `strict` turns FastICA
/// non-convergence into an error.
pub fn separate_sample(
    sample: &Sample,
    method: Method,
    seed: u64,
    grouping: Grouping,
    stft: (usize, usize),
    strict: bool,
) -> Result<SampleSeparation> {
    let n = sample.components.len();
    let out = match method {
        Method::Ica => {
            if sample.observations.len() < n {
                return Err(HarnessError::validation(format!(
                    "FastICA needs at least {n} observations; this sample has {} (add a mimo block)",
                    sample.observations.len()
                )));
            }
            let p = IcaParams {
                n_sources: n,
                seed,
                ..Default::default()
            };
            let r = fastica_separate(&sample.observations, &p)?;
            if strict && !r.converged {
                return Err(HarnessError::Numeric(format!(
                    "FastICA did not converge in {} iterations",
                    r.iterations
                )));
            }
            SampleSeparation {
                method,
                score: sinr_improvement(&r.estimates, &sample.components, sample.mixture())?,
                converged: Some(r.converged),
                iterations: Some(r.iterations),
                divergence_monotone: None,
                estimates: r.estimates,
            }
        }
        Method::Nmf => {
            let p = NmfParams {
                seed,
                ..NmfParams::for_sources(n)
            };
            let r = match grouping {
                Grouping::Sequential => nmf_separate(sample.mixture(), &p, stft.0, stft.1)?,
                Grouping::Oracle => nmf_separate_oracle(sample.mixture(), &sample.components, &p, stft.0, stft.1)?,
            };
            let monotone = non_increasing(&r.divergence, MONOTONE_SLACK);
            SampleSeparation {
                method,
                score: sinr_improvement(&r.estimates, &sample.components, sample.mixture())?,
                converged: None,
                iterations: Some(r.divergence.len() - 1),
                divergence_monotone: Some(monotone),
                estimates: r.estimates,
            }
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub master_seed: u64,
    pub n_seeds: usize,
    pub rows: Vec<TableRow>,
    pub ica_runs: usize,
    pub ica_converged: usize,
    pub nmf_runs: usize,
    pub nmf_monotone: usize,
    pub wall_s: f64,
}

impl SuiteReport {
    pub fn rows_for(&self, method: Method) -> Vec<&TableRow> {
        let mut r: Vec<&TableRow> = self.rows.iter().filter(|r| r.method == method).collect();
        r.sort_by_key(|r| r.n_sources);
        r
    }

    pub fn mean(&self, method: Method, n_sources: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n_sources == n_sources)
            .map(|r| r.mean_improvement_db)
    }

    /// Mean improvement never rises as sources are added.
    pub fn non_increasing(&self, method: Method) -> bool {
        self.rows_for(method)
            .windows(2)
            .all(|w| w[1].mean_improvement_db <= w[0].mean_improvement_db)
    }

    pub fn table(&self) -> String {
        format_table(&self.rows)
    }
}

struct Run {
    method: Method,
    n_sources: usize,
    improvement_db: f64,
    wall_s: f64,
    n_samples: usize,
    converged: bool,
    monotone: bool,
}

/// Every (method, source count, seed) combination, in parallel. Seeds are
/// `derive_seed(master_seed, k)` for `k < n_seeds`.
pub fn evaluate_suite(
    methods: &[Method],
    cfg: &SuiteConfig,
    source_counts: &[usize],
    master_seed: u64,
    n_seeds: usize,
) -> Result<SuiteReport> {
    if methods.is_empty() || source_counts.is_empty() || n_seeds == 0 {
        return Err(HarnessError::validation("empty evaluation suite"));
    }
    let t0 = Instant::now();
    let jobs: Vec<(usize, u64)> = source_counts
        .iter()
        .flat_map(|&n| (0..n_seeds as u64).map(move |k| (n, derive_seed(master_seed, k))))
        .collect();
    let runs: Vec<Run> = jobs
        .par_iter()
        .map(|&(n, seed)| -> Result<Vec<Run>> {
            let sc = build_scenario(cfg, n, seed)?;
            methods
                .iter()
                .map(|&m| {
                    let t = Instant::now();
                    let r = score_method(m, &sc, cfg)?;
                    Ok(Run {
                        method: m,
                        n_sources: n,
                        improvement_db: r.score.mean_improvement_db(),
                        wall_s: t.elapsed().as_secs_f64(),
                        n_samples: sc.mixture().len(),
                        converged: r.converged.unwrap_or(true),
                        monotone: r.divergence_monotone(MONOTONE_SLACK),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut rows = Vec::new();
    for &m in methods {
        for &n in source_counts {
            let cell: Vec<&Run> = runs.iter().filter(|r| r.method == m && r.n_sources == n).collect();
            let imp: Vec<f64> = cell.iter().map(|r| r.improvement_db).collect();
            let wall: f64 = cell.iter().map(|r| r.wall_s).sum();
            let samples: usize = cell.iter().map(|r| r.n_samples).sum();
            rows.push(summarize(m, n, &imp, Some(1e3 * wall / (samples as f64 / 1e3)))?);
        }
    }
    let count = |m: Method, f: fn(&Run) -> bool| runs.iter().filter(|r| r.method == m && f(r)).count();
    Ok(SuiteReport {
        config: cfg.clone(),
        master_seed,
        n_seeds,
        rows,
        ica_runs: count(Method::Ica, |_| true),
        ica_converged: count(Method::Ica, |r| r.converged),
        nmf_runs: count(Method::Nmf, |_| true),
        nmf_monotone: count(Method::Nmf, |r| r.monotone),
        wall_s: t0.elapsed().as_secs_f64(),
    })
}
