//! Kronecker-correlated MIMO channels from 1x1 up to 8x8.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::channel::{fading_process, FadingSpec};
use crate::signal::db_to_linear;
use crate::{Complex64, Error, IqBuffer, Result, Rng};

pub const MAX_ANTENNAS: usize = 8;
const EIGEN_FLOOR: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MimoConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub tx_corr_rho: f64,
    pub rx_corr_rho: f64,
    pub fading: FadingSpec,
}

impl Default for MimoConfig {
    fn default() -> Self {
        MimoConfig {
            n_tx: 2,
            n_rx: 2,
            tx_corr_rho: 0.0,
            rx_corr_rho: 0.0,
            fading: FadingSpec::rayleigh(0.0),
        }
    }
}

impl MimoConfig {
    pub fn new(n_tx: usize, n_rx: usize) -> Self {
        MimoConfig {
            n_tx,
            n_rx,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, n) in [("n_tx", self.n_tx), ("n_rx", self.n_rx)] {
            if !(1..=MAX_ANTENNAS).contains(&n) {
                return Err(Error::invalid(format!(
                    "{what} must be in 1..={MAX_ANTENNAS}, got {n}"
                )));
            }
        }
        check_rho(self.tx_corr_rho)?;
        check_rho(self.rx_corr_rho)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::invalid(format!("correlation must be in [0, 1), got {rho}")))
    }
}

/// Exponential correlation profile `R[i][j] = rho^|i-j|`.
pub fn correlation_matrix(n: usize, rho: f64) -> Result<DMatrix<f64>> {
    check_rho(rho)?;
    Ok(DMatrix::from_fn(n, n, |i, j| rho.powi(i.abs_diff(j) as i32)))
}

/// Symmetric square root through the eigendecomposition, with negative
/// round-off eigenvalues clamped.
pub fn psd_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(r.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// One flat matrix, or one matrix per sample when the channel fades.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    pub n_rx: usize,
    pub n_tx: usize,
    pub matrices: Vec<CMatrix>,
}

impl MimoChannel {
    pub fn constant(h: CMatrix) -> Self {
        MimoChannel {
            n_rx: h.nrows(),
            n_tx: h.ncols(),
            matrices: vec![h],
        }
    }

    pub fn is_static(&self) -> bool {
        self.matrices.len() == 1
    }

    pub fn at(&self, k: usize) -> &CMatrix {
        if self.is_static() {
            &self.matrices[0]
        } else {
            &self.matrices[k]
        }
    }
}

/// `H = R_rx^{1/2} H_w R_tx^{1/2}`. A zero Doppler gives one matrix;
/// otherwise every element of `H_w` follows its own fading trajectory.
pub fn draw_mimo_channel(
    cfg: &MimoConfig,
    n_samples: usize,
    sample_rate_hz: f64,
    rng: &Rng,
) -> Result<MimoChannel> {
    cfg.validate()?;
    let rt = complexify(&psd_sqrt(&correlation_matrix(cfg.n_tx, cfg.tx_corr_rho)?));
    let rr = complexify(&psd_sqrt(&correlation_matrix(cfg.n_rx, cfg.rx_corr_rho)?));
    let fading = FadingSpec {
        shadowing_sigma_db: 0.0,
        ..cfg.fading
    };
    let steps = if cfg.fading.doppler_hz == 0.0 { 1 } else { n_samples };
    let mut tracks = Vec::with_capacity(cfg.n_rx * cfg.n_tx);
    for j in 0..cfg.n_tx {
        for i in 0..cfg.n_rx {
            let label = (i * MAX_ANTENNAS + j) as u64;
            tracks.push(fading_process(&fading, steps, sample_rate_hz, &rng.fork(label))?);
        }
    }
    let matrices = (0..steps)
        .map(|k| {
            let hw = CMatrix::from_fn(cfg.n_rx, cfg.n_tx, |i, j| tracks[j * cfg.n_rx + i][k]);
            &rr * hw * &rt
        })
        .collect();
    Ok(MimoChannel {
        n_rx: cfg.n_rx,
        n_tx: cfg.n_tx,
        matrices,
    })
}

/// `Y = H X + N` per sample. Noise is spatially white with power set by
/// `snr_db` against the mean received signal power over all antennas.
pub fn apply_mimo(
    x: &[IqBuffer],
    channel: &MimoChannel,
    snr_db: Option<f64>,
    rng: &Rng,
) -> Result<Vec<IqBuffer>> {
    if x.len() != channel.n_tx {
        return Err(Error::DimensionMismatch(format!(
            "{} input streams for a channel with {} transmit antennas",
            x.len(),
            channel.n_tx
        )));
    }
    let first = x.first().ok_or_else(|| Error::invalid("no input streams"))?;
    let n = first.len();
    let fs = first.sample_rate_hz;
    for s in x {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: s.len(),
            });
        }
        if s.sample_rate_hz != fs {
            return Err(Error::invalid("input streams differ in sample rate"));
        }
    }
    if !channel.is_static() && channel.matrices.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: channel.matrices.len(),
        });
    }
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; channel.n_rx];
    for k in 0..n {
        let h = channel.at(k);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += h[(i, j)] * xj.samples[k];
            }
            yi[k] = acc;
        }
    }
    if let Some(snr) = snr_db.filter(|s| s.is_finite()) {
        let p = y.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() / (n * channel.n_rx) as f64;
        if !(p > 0.0) {
            return Err(Error::ZeroPower);
        }
        let sigma = (p / db_to_linear(snr)).sqrt();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut r = rng.fork(i as u64);
            yi.iter_mut().for_each(|z| *z += r.complex_normal() * sigma);
        }
    }
    y.into_iter().map(|s| IqBuffer::new(s, fs)).collect()
}

/// Least-squares `H = Y X^H (X X^H)^{-1}` from known transmit and receive
/// streams.
pub fn estimate_channel_ls(x: &[IqBuffer], y: &[IqBuffer]) -> Result<CMatrix> {
    let n = x.first().map_or(0, IqBuffer::len);
    let xm = CMatrix::from_fn(x.len(), n, |j, k| x[j].samples[k]);
    let ym = CMatrix::from_fn(y.len(), n, |i, k| y[i].samples[k]);
    let xh = xm.adjoint();
    let gram = &xm * &xh;
    let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
    Ok(ym * xh * inv)
}
