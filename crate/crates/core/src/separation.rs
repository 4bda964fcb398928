//! Blind source separation baselines: complex FastICA over multichannel
//! observations and beta-divergence NMF over a single mixture spectrogram,
//! plus the seeded scenario suite both are scored on.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::channel::{mix_sources, MixEntry, MixParams, SourcePlacement};
use crate::gsm::GsmConfig;
use crate::metrics::{istft, sinr_improvement, stft, SinrScore};
use crate::mimo::{apply_mimo, draw_mimo_channel, CMatrix, MimoConfig};
use crate::ofdm::{Modulation, OfdmConfig};
use crate::umts::UmtsConfig;
use crate::{Complex64, Error, IqBuffer, Result, Rng, WaveformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `G(u) = sqrt(a + u)`, robust to outliers.
    #[default]
    Sqrt,
    /// `G(u) = log(a + u)`, the complex analogue of log-cosh.
    #[serde(alias = "logcosh")]
    Log,
}

const NONLIN_A: f64 = 0.1;

impl Nonlinearity {
    /// `(g(u), g'(u))` where `g = dG/du`.
    fn eval(self, u: f64) -> (f64, f64) {
        let v = NONLIN_A + u;
        match self {
            Nonlinearity::Sqrt => {
                let s = v.sqrt();
                (0.5 / s, -0.25 / (v * s))
            }
            Nonlinearity::Log => (1.0 / v, -1.0 / (v * v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaParams {
    pub n_sources: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub nonlinearity: Nonlinearity,
    pub seed: u64,
}

impl Default for IcaParams {
    fn default() -> Self {
        IcaParams {
            n_sources: 2,
            max_iters: 200,
            tolerance: 1e-7,
            nonlinearity: Nonlinearity::Sqrt,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaResult {
    /// Unit-variance source estimates.
    pub estimates: Vec<IqBuffer>,
    /// `N x M` matrix taking centered observations to estimates.
    pub unmixing: CMatrix,
    pub converged: bool,
    pub iterations: usize,
}

/// Whitening transform `V` (N x M) for the top `n` principal directions.
fn whitening(x: &CMatrix, n: usize) -> Result<CMatrix> {
    let t = x.ncols() as f64;
    let cov = (x * x.adjoint()) / Complex64::new(t, 0.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let mut v = CMatrix::zeros(n, x.nrows());
    for (r, &i) in order.iter().take(n).enumerate() {
        let l = eig.eigenvalues[i];
        if !(l > 1e-12 * top) || !(top > 0.0) {
            return Err(Error::RankDeficient);
        }
        let row = eig.eigenvectors.column(i).adjoint() / Complex64::new(l.sqrt(), 0.0);
        v.set_row(r, &row);
    }
    Ok(v)
}

/// `W (W^H W)^{-1/2}`: orthonormal columns closest to `W`.
fn symmetric_decorrelation(w: &CMatrix) -> CMatrix {
    let g = w.adjoint() * w;
    let eig = SymmetricEigen::new(g);
    let d = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(1.0 / l.max(1e-300).sqrt(), 0.0)),
    );
    w * (&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

fn stack(observations: &[IqBuffer]) -> Result<(CMatrix, f64)> {
    let first = observations
        .first()
        .ok_or_else(|| Error::invalid("no observations"))?;
    let t = first.len();
    for o in observations {
        if o.len() != t {
            return Err(Error::LengthMismatch {
                expected: t,
                actual: o.len(),
            });
        }
        if o.sample_rate_hz != first.sample_rate_hz {
            return Err(Error::invalid("observations differ in sample rate"));
        }
    }
    let mut x = CMatrix::from_fn(observations.len(), t, |i, k| observations[i].samples[k]);
    for mut row in x.row_iter_mut() {
        let mean = row.sum() / Complex64::new(t as f64, 0.0);
        row.iter_mut().for_each(|z| *z -= mean);
    }
    Ok((x, first.sample_rate_hz))
}

/// Complex FastICA with symmetric decorrelation.
///
/// Non-convergence is not an error: the last iterate is returned with
/// `converged = false`.
pub fn fastica_separate(observations: &[IqBuffer], params: &IcaParams) -> Result<IcaResult> {
    let n = params.n_sources;
    let m = observations.len();
    if n == 0 || n > m {
        return Err(Error::invalid(format!(
            "need 1 <= n_sources <= {m} observations, got {n}"
        )));
    }
    let (x, fs) = stack(observations)?;
    let t = x.ncols();
    if t < 100 * n {
        return Err(Error::invalid(format!(
            "{t} samples is too few for {n} sources"
        )));
    }
    let v = whitening(&x, n)?;
    let z = &v * &x;
    let mut rng = Rng::new(params.seed);
    let mut w = symmetric_decorrelation(&CMatrix::from_fn(n, n, |_, _| rng.complex_normal()));
    let mut converged = false;
    let mut iterations = 0;
    let tf = t as f64;
    while iterations < params.max_iters {
        iterations += 1;
        let y = w.adjoint() * &z;
        let mut next = CMatrix::zeros(n, n);
        for i in 0..n {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut mean_d = 0.0;
            for k in 0..t {
                let yk = y[(i, k)];
                let u = yk.norm_sqr();
                let (g, dg) = params.nonlinearity.eval(u);
                let c = yk.conj() * g;
                for (a, zr) in acc.iter_mut().zip(z.column(k).iter()) {
                    *a += zr * c;
                }
                mean_d += g + u * dg;
            }
            mean_d /= tf;
            for r in 0..n {
                next[(r, i)] = acc[r] / tf - w[(r, i)] * mean_d;
            }
        }
        let next = symmetric_decorrelation(&next);
        let change = (0..n)
            .map(|i| 1.0 - next.column(i).dotc(&w.column(i)).norm())
            .fold(0.0, f64::max);
        w = next;
        if change < params.tolerance {
            converged = true;
            break;
        }
    }
    let unmixing = w.adjoint() * &v;
    let s = &unmixing * &x;
    let estimates = (0..n)
        .map(|i| IqBuffer::new(s.row(i).iter().copied().collect(), fs))
        .collect::<Result<Vec<_>>>()?;
    Ok(IcaResult {
        estimates,
        unmixing,
        converged,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfParams {
    pub n_components: usize,
    /// 0 is Itakura-Saito, 1 Kullback-Leibler, 2 Euclidean.
    pub beta: f64,
    pub max_iters: usize,
    pub components_per_source: usize,
    pub seed: u64,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams {
            n_components: 8,
            beta: 1.0,
            max_iters: 200,
            components_per_source: 4,
            seed: 0,
        }
    }
}

impl NmfParams {
    pub fn for_sources(n_sources: usize) -> Self {
        let d = NmfParams::default();
        NmfParams {
            n_components: n_sources * d.components_per_source,
            ..d
        }
    }

    pub fn n_sources(&self) -> usize {
        self.n_components / self.components_per_source.max(1)
    }
}

/// Exponent that makes the multiplicative update a majorize-minimize step.
fn mm_exponent(beta: f64) -> f64 {
    if beta < 1.0 {
        1.0 / (2.0 - beta)
    } else if beta > 2.0 {
        1.0 / (beta - 1.0)
    } else {
        1.0
    }
}

/// Elementwise beta-divergence `D(V | L)` summed over all cells.
pub fn beta_divergence(v: &DMatrix<f64>, l: &DMatrix<f64>, beta: f64) -> f64 {
    v.iter()
        .zip(l.iter())
        .map(|(&x, &y)| {
            if beta == 1.0 {
                if x > 0.0 {
                    x * (x / y).ln() - x + y
                } else {
                    y
                }
            } else if beta == 0.0 {
                x / y - (x / y).ln() - 1.0
            } else {
                (x.powf(beta) + (beta - 1.0) * y.powf(beta) - beta * x * y.powf(beta - 1.0))
                    / (beta * (beta - 1.0))
            }
        })
        .sum()
}

/// Factorization of one mixture's magnitude spectrogram.
#[derive(Debug, Clone)]
pub struct NmfModel {
    /// `F x K` spectral templates with unit-sum columns.
    pub w: DMatrix<f64>,
    /// `K x T` activations.
    pub h: DMatrix<f64>,
    /// Divergence before the first update and after each iteration.
    pub divergence: Vec<f64>,
    frames: Vec<Vec<Complex64>>,
    window: usize,
    hop: usize,
    pad: usize,
    padded_len: usize,
    len: usize,
    sample_rate_hz: f64,
}

/// No step rises by more than `slack` relative to the previous value.
pub fn non_increasing(d: &[f64], slack: f64) -> bool {
    d.windows(2)
        .all(|w| w[1] <= w[0] + slack * w[0].abs().max(f64::MIN_POSITIVE))
}

/// Keeps every cell strictly positive so ratios stay finite.
const NMF_FLOOR: f64 = 1e-300;

fn floor_all(m: &mut DMatrix<f64>) {
    m.iter_mut().for_each(|x| *x = x.max(NMF_FLOOR));
}

pub fn nmf_factorize(
    mixture: &IqBuffer,
    params: &NmfParams,
    stft_window: usize,
    stft_hop: usize,
) -> Result<NmfModel> {
    let k = params.n_components;
    if k == 0 {
        return Err(Error::invalid("n_components must be positive"));
    }
    if stft_hop == 0 || stft_hop > stft_window || stft_window < 4 {
        return Err(Error::invalid("need 0 < hop <= window and window >= 4"));
    }
    if !params.beta.is_finite() {
        return Err(Error::invalid("beta must be finite"));
    }
    let n = mixture.len();
    let pad = stft_window;
    let body = n + 2 * pad - stft_window;
    let padded_len = stft_window + body.div_ceil(stft_hop) * stft_hop;
    let mut x = vec![Complex64::new(0.0, 0.0); padded_len];
    x[pad..pad + n].copy_from_slice(&mixture.samples);
    let frames = stft(&x, stft_window, stft_hop);
    let f = stft_window;
    let t = frames.len();
    let mut v = DMatrix::from_fn(f, t, |i, j| frames[j][i].norm());
    let vmax = v.max();
    if !(vmax > 0.0) {
        return Err(Error::ZeroPower);
    }
    // a relative floor keeps the Itakura-Saito case finite on empty bins
    let v_floor = vmax * 1e-12;
    v.iter_mut().for_each(|x| *x = x.max(v_floor));

    let mut rng = Rng::new(params.seed);
    let scale = (v.mean() / k as f64).sqrt();
    // Each template starts concentrated on its own slice of the band
    // (bins ranked from -fs/2 up), with a small floor so it can migrate.
    let mut w = DMatrix::from_fn(f, k, |i, c| {
        let rank = (i + f / 2) % f;
        let shape = if rank * k / f == c { 1.0 } else { 0.01 };
        scale * (0.5 + rng.uniform()) * shape
    });
    let mut h = DMatrix::from_fn(k, t, |_, _| scale * (0.5 + rng.uniform()));
    let beta = params.beta;
    let gamma = mm_exponent(beta);
    let mut lam = &w * &h;
    floor_all(&mut lam);
    let mut divergence = vec![beta_divergence(&v, &lam, beta)];
    for _ in 0..params.max_iters {
        let num_l = lam.zip_map(&v, |l, x| l.powf(beta - 2.0) * x);
        let den_l = lam.map(|l| l.powf(beta - 1.0));
        let wt = w.transpose();
        let ratio = (&wt * &num_l).zip_map(&(&wt * &den_l), |a, b| (a / b).powf(gamma));
        h.component_mul_assign(&ratio);
        floor_all(&mut h);

        lam = &w * &h;
        floor_all(&mut lam);
        let num_l = lam.zip_map(&v, |l, x| l.powf(beta - 2.0) * x);
        let den_l = lam.map(|l| l.powf(beta - 1.0));
        let ht = h.transpose();
        let ratio = (&num_l * &ht).zip_map(&(&den_l * &ht), |a, b| (a / b).powf(gamma));
        w.component_mul_assign(&ratio);
        floor_all(&mut w);

        // unit-sum templates; activations absorb the scale so W H is unchanged
        for c in 0..k {
            let s = w.column(c).sum();
            if s > 0.0 {
                w.column_mut(c).scale_mut(1.0 / s);
                h.row_mut(c).scale_mut(s);
            }
        }
        lam = &w * &h;
        floor_all(&mut lam);
        divergence.push(beta_divergence(&v, &lam, beta));
    }
    Ok(NmfModel {
        w,
        h,
        divergence,
        frames,
        window: stft_window,
        hop: stft_hop,
        pad,
        padded_len,
        len: n,
        sample_rate_hz: mixture.sample_rate_hz,
    })
}

impl NmfModel {
    pub fn n_components(&self) -> usize {
        self.w.ncols()
    }

    /// True when no iteration raised the divergence by more than `slack`
    /// relative to the previous value.
    pub fn is_monotone(&self, slack: f64) -> bool {
        non_increasing(&self.divergence, slack)
    }

    /// Power of component `c` at every time-frequency cell.
    fn component_power(&self, c: usize) -> DMatrix<f64> {
        let mut p = self.w.column(c) * self.h.row(c);
        p.iter_mut().for_each(|x| *x *= *x);
        p
    }

    /// Wiener-style power masks, one per group, summing to one per cell.
    pub fn masks(&self, groups: &[Vec<usize>]) -> Vec<DMatrix<f64>> {
        let (f, t) = (self.w.nrows(), self.h.ncols());
        let mut out: Vec<DMatrix<f64>> = groups
            .iter()
            .map(|g| {
                g.iter()
                    .fold(DMatrix::zeros(f, t), |acc, &c| acc + self.component_power(c))
            })
            .collect();
        let g = groups.len() as f64;
        for i in 0..f {
            for j in 0..t {
                let total: f64 = out.iter().map(|m| m[(i, j)]).sum();
                for m in out.iter_mut() {
                    m[(i, j)] = if total > 0.0 { m[(i, j)] / total } else { 1.0 / g };
                }
            }
        }
        out
    }

    /// Masked inverse STFT for each group of components.
    pub fn reconstruct(&self, groups: &[Vec<usize>]) -> Result<Vec<IqBuffer>> {
        self.masks(groups)
            .iter()
            .map(|m| {
                let masked: Vec<Vec<Complex64>> = self
                    .frames
                    .iter()
                    .enumerate()
                    .map(|(j, fr)| fr.iter().enumerate().map(|(i, z)| z * m[(i, j)]).collect())
                    .collect();
                let y = istft(&masked, self.window, self.hop, self.padded_len);
                IqBuffer::new(y[self.pad..self.pad + self.len].to_vec(), self.sample_rate_hz)
            })
            .collect()
    }

    /// Consecutive runs of `per_group` components.
    pub fn sequential_groups(&self, per_group: usize) -> Vec<Vec<usize>> {
        let k = self.n_components();
        (0..k).step_by(per_group.max(1)).map(|s| (s..(s + per_group).min(k)).collect()).collect()
    }

    /// Groups components by which reference their individual reconstruction
    /// correlates with most. Each reference first claims its best
    /// unclaimed component so no group is empty.
    pub fn oracle_groups(&self, references: &[IqBuffer]) -> Result<Vec<Vec<usize>>> {
        let k = self.n_components();
        if references.is_empty() || references.len() > k {
            return Err(Error::invalid(format!(
                "cannot split {k} components among {} references",
                references.len()
            )));
        }
        let singles: Vec<Vec<usize>> = (0..k).map(|c| vec![c]).collect();
        let parts = self.reconstruct(&singles)?;
        let score: Vec<Vec<f64>> = parts
            .iter()
            .map(|p| references.iter().map(|r| normalized_corr(&p.samples, &r.samples)).collect())
            .collect();
        let mut groups = vec![Vec::new(); references.len()];
        let mut taken = vec![false; k];
        for (r, g) in groups.iter_mut().enumerate() {
            let best = (0..k)
                .filter(|&c| !taken[c])
                .max_by(|&a, &b| score[a][r].total_cmp(&score[b][r]))
                .expect("more components than references");
            taken[best] = true;
            g.push(best);
        }
        for c in (0..k).filter(|&c| !taken[c]) {
            let r = (0..references.len())
                .max_by(|&a, &b| score[c][a].total_cmp(&score[c][b]))
                .unwrap_or(0);
            groups[r].push(c);
        }
        groups.iter_mut().for_each(|g| g.sort_unstable());
        Ok(groups)
    }
}

fn normalized_corr(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ab: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    let aa: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let bb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if aa > 0.0 && bb > 0.0 {
        ab.norm() / (aa * bb).sqrt()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct NmfResult {
    pub estimates: Vec<IqBuffer>,
    pub groups: Vec<Vec<usize>>,
    pub divergence: Vec<f64>,
}

/// NMF separation with components grouped in construction order.
pub fn nmf_separate(
    mixture: &IqBuffer,
    params: &NmfParams,
    stft_window: usize,
    stft_hop: usize,
) -> Result<NmfResult> {
    let model = nmf_factorize(mixture, params, stft_window, stft_hop)?;
    let groups = model.sequential_groups(params.components_per_source);
    Ok(NmfResult {
        estimates: model.reconstruct(&groups)?,
        groups,
        divergence: model.divergence,
    })
}

/// NMF separation with components grouped against known references.
pub fn nmf_separate_oracle(
    mixture: &IqBuffer,
    references: &[IqBuffer],
    params: &NmfParams,
    stft_window: usize,
    stft_hop: usize,
) -> Result<NmfResult> {
    let model = nmf_factorize(mixture, params, stft_window, stft_hop)?;
    let groups = model.oracle_groups(references)?;
    Ok(NmfResult {
        estimates: model.reconstruct(&groups)?,
        groups,
        divergence: model.divergence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ica,
    Nmf,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Ica, Method::Nmf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ica => "ica",
            Method::Nmf => "nmf",
        }
    }
}

/// Settings for the seeded separation scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub common_rate_hz: f64,
    pub duration_s: f64,
    pub snr_db: f64,
    /// Per-source power is drawn uniformly within this many dB of 0 dB.
    pub power_spread_db: f64,
    pub max_rx: usize,
    pub stft_window: usize,
    pub stft_hop: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            common_rate_hz: 15.36e6,
            duration_s: 0.5e-3,
            snr_db: 10.0,
            power_spread_db: 3.0,
            max_rx: 8,
            stft_window: 256,
            stft_hop: 128,
        }
    }
}

/// Waveforms drawn in order as the source count grows, with the nominal
/// channel width used to keep frequency offsets inside the band.
pub fn source_pool() -> Vec<(WaveformConfig, f64)> {
    let lte = OfdmConfig {
        bandwidth_hz: 5e6,
        modulation: Modulation::Qam16,
        ..OfdmConfig::lte_default()
    };
    let nr = OfdmConfig {
        bandwidth_hz: 10e6,
        numerology_mu: 1,
        modulation: Modulation::Qam16,
        ..OfdmConfig::nr_default()
    };
    vec![
        (WaveformConfig::Gsm(GsmConfig::default()), 0.2e6),
        (WaveformConfig::Lte(lte), 5e6),
        (WaveformConfig::Umts(UmtsConfig::default()), 5e6),
        (WaveformConfig::Nr(nr), 10e6),
        (WaveformConfig::Gsm(GsmConfig::default()), 0.2e6),
    ]
}

pub const MAX_SUITE_SOURCES: usize = 5;

/// One separation problem with its ground truth.
#[derive(Debug, Clone)]
pub struct SeparationScenario {
    pub n_sources: usize,
    pub seed: u64,
    /// One stream per receive antenna.
    pub observations: Vec<IqBuffer>,
    /// Each source's contribution at receive antenna 0.
    pub references: Vec<IqBuffer>,
}

impl SeparationScenario {
    /// The single-channel mixture NMF sees: receive antenna 0.
    pub fn mixture(&self) -> &IqBuffer {
        &self.observations[0]
    }
}

/// Builds the `n_sources` scenario for `seed`: sources at the common rate
/// with random offsets and powers, a static Rayleigh MIMO channel with
/// `min(2N, max_rx)` receive antennas, and white noise at `snr_db`.
pub fn build_scenario(cfg: &SuiteConfig, n_sources: usize, seed: u64) -> Result<SeparationScenario> {
    if n_sources == 0 || n_sources > MAX_SUITE_SOURCES {
        return Err(Error::invalid(format!(
            "suite supports 1..={MAX_SUITE_SOURCES} sources"
        )));
    }
    let rng = Rng::new(seed);
    let mut draw = rng.fork(1);
    let n = (cfg.duration_s * cfg.common_rate_hz).round() as usize;
    let mut entries = Vec::with_capacity(n_sources);
    for (i, (wf, bw)) in source_pool().into_iter().take(n_sources).enumerate() {
        let wf = wf.covering(cfg.duration_s)?;
        let source = wf.generate(&rng.fork(100 + i as u64))?;
        let room = (0.45 * cfg.common_rate_hz - bw / 2.0).max(0.0);
        entries.push(MixEntry {
            source,
            placement: SourcePlacement {
                power_db: draw.uniform_range(-cfg.power_spread_db, cfg.power_spread_db),
                delay_s: 0.0,
                freq_offset_hz: draw.uniform_range(-room, room),
            },
            channel: None,
        });
    }
    let params = MixParams {
        common_rate_hz: cfg.common_rate_hz,
        n_samples: Some(n),
        noise_snr_db: None,
    };
    let tx = mix_sources(&entries, &params, &rng.fork(2))?.components;
    let n_rx = (2 * n_sources).min(cfg.max_rx).max(n_sources);
    let channel = draw_mimo_channel(&MimoConfig::new(n_sources, n_rx), 1, cfg.common_rate_hz, &rng.fork(3))?;
    let observations = apply_mimo(&tx, &channel, Some(cfg.snr_db), &rng.fork(4))?;
    let h = &channel.matrices[0];
    let references = tx.iter().enumerate().map(|(j, s)| s.scaled(h[(0, j)])).collect();
    Ok(SeparationScenario {
        n_sources,
        seed,
        observations,
        references,
    })
}

/// Score of one separation run plus the solver diagnostics it produced.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub score: SinrScore,
    /// FastICA only.
    pub converged: Option<bool>,
    /// NMF only.
    pub divergence: Option<Vec<f64>>,
}

impl MethodRun {
    /// Divergence never rose by more than `slack` (relative); true for ICA.
    pub fn divergence_monotone(&self, slack: f64) -> bool {
        self.divergence.as_ref().is_none_or(|d| non_increasing(d, slack))
    }
}

/// Runs one method on one scenario and scores it against the references.
pub fn score_method(method: Method, sc: &SeparationScenario, cfg: &SuiteConfig) -> Result<MethodRun> {
    let (estimates, converged, divergence) = match method {
        Method::Ica => {
            let p = IcaParams {
                n_sources: sc.n_sources,
                seed: sc.seed,
                ..Default::default()
            };
            let r = fastica_separate(&sc.observations, &p)?;
            (r.estimates, Some(r.converged), None)
        }
        Method::Nmf => {
            let p = NmfParams {
                seed: sc.seed,
                ..NmfParams::for_sources(sc.n_sources)
            };
            let r = nmf_separate_oracle(sc.mixture(), &sc.references, &p, cfg.stft_window, cfg.stft_hop)?;
            (r.estimates, None, Some(r.divergence))
        }
    };
    Ok(MethodRun {
        score: sinr_improvement(&estimates, &sc.references, sc.mixture())?,
        converged,
        divergence,
    })
}

/// Aggregate for one (method, source count) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub n_sources: usize,
    pub n_runs: usize,
    pub mean_improvement_db: f64,
    pub std_improvement_db: f64,
    /// Wall time per 1000 input samples; filled by callers that time runs.
    pub runtime_ms_per_1k_samples: Option<f64>,
}

/// Mean and population standard deviation of per-run mean improvements.
pub fn summarize(
    method: Method,
    n_sources: usize,
    improvements: &[f64],
    runtime_ms_per_1k_samples: Option<f64>,
) -> Result<TableRow> {
    if improvements.is_empty() {
        return Err(Error::invalid("no runs to summarize"));
    }
    let k = improvements.len() as f64;
    let mean = improvements.iter().sum::<f64>() / k;
    let var = improvements.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
    Ok(TableRow {
        method,
        n_sources,
        n_runs: improvements.len(),
        mean_improvement_db: mean,
        std_improvement_db: var.sqrt(),
        runtime_ms_per_1k_samples,
    })
}

/// Sequential evaluation over `seeds` for each source count.
pub fn evaluate_separation(
    method: Method,
    cfg: &SuiteConfig,
    source_counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<TableRow>> {
    if seeds.is_empty() || source_counts.is_empty() {
        return Err(Error::invalid("empty evaluation suite"));
    }
    source_counts
        .iter()
        .map(|&n| {
            let imp = seeds
                .iter()
                .map(|&s| Ok(score_method(method, &build_scenario(cfg, n, s)?, cfg)?.score.mean_improvement_db()))
                .collect::<Result<Vec<f64>>>()?;
            summarize(method, n, &imp, None)
        })
        .collect()
}

/// Text table with the unimplemented deep-learning baselines as
/// placeholder columns.
pub fn format_table(rows: &[TableRow]) -> String {
    let mut counts: Vec<usize> = rows.iter().map(|r| r.n_sources).collect();
    counts.sort_unstable();
    counts.dedup();
    let mut out = String::from(
        "sources | ICA mean (dB) | ICA std | ICA ms/1k | NMF mean (dB) | NMF std | NMF ms/1k | deep BSS | CNN-LSTM\n",
    );
    for n in counts {
        let cell = |m: Method| rows.iter().find(|r| r.method == m && r.n_sources == n);
        let fmt = |r: Option<&TableRow>| match r {
            Some(r) => format!(
                "{:>13.2} | {:>7.2} | {:>9}",
                r.mean_improvement_db,
                r.std_improvement_db,
                r.runtime_ms_per_1k_samples.map_or("-".to_string(), |t| format!("{t:.3}"))
            ),
            None => format!("{:>13} | {:>7} | {:>9}", "-", "-", "-"),
        };
        out.push_str(&format!(
            "{n:>7} | {} | {} | unimplemented | unimplemented\n",
            fmt(cell(Method::Ica)),
            fmt(cell(Method::Nmf))
        ));
    }
    out
}
