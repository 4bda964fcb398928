//! Pulse-shaping filter design and real-tap FIR helpers.

use std::f64::consts::PI;

use crate::{Complex64, Error, Result};

/// Symmetric, odd-length real FIR taps for pulse shaping.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTaps {
    pub taps: Vec<f64>,
    pub samples_per_symbol: usize,
    pub span_symbols: usize,
}

impl FilterTaps {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn center(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Magnitude of the DTFT at `cycles_per_sample`.
    pub fn response_at(&self, cycles_per_sample: f64) -> f64 {
        let c = self.center() as f64;
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| h * Complex64::from_polar(1.0, -2.0 * PI * cycles_per_sample * (n as f64 - c)))
            .sum::<Complex64>()
            .norm()
    }
}

/// Smallest odd tap count covering `span` symbols.
fn odd_length(span_symbols: usize, samples_per_symbol: usize) -> usize {
    2 * (span_symbols * samples_per_symbol).div_ceil(2) + 1
}

fn check_sps_span(samples_per_symbol: usize, span_symbols: usize) -> Result<()> {
    if samples_per_symbol < 2 {
        return Err(Error::invalid(format!(
            "samples_per_symbol must be >= 2, got {samples_per_symbol}"
        )));
    }
    if span_symbols < 2 {
        return Err(Error::invalid(format!(
            "span_symbols must be >= 2, got {span_symbols}"
        )));
    }
    Ok(())
}

/// Gaussian lowpass for GMSK with 3-dB bandwidth `bt / T`.
///
/// Taps are normalized to unit sum, so a rectangular NRZ symbol filtered by
/// them integrates to the same area as the unfiltered symbol. The GMSK
/// modulator relies on this to advance phase by exactly pi/2 per symbol.
pub fn design_gaussian_filter(
    bt: f64,
    samples_per_symbol: usize,
    span_symbols: usize,
) -> Result<FilterTaps> {
    if !(bt > 0.0 && bt <= 1.0) {
        return Err(Error::invalid(format!("bt must be in (0, 1], got {bt}")));
    }
    check_sps_span(samples_per_symbol, span_symbols)?;
    let n = odd_length(span_symbols, samples_per_symbol);
    let half = (n / 2) as f64;
    let alpha = 2.0 * PI * PI * bt * bt / 2f64.ln();
    let mut taps: Vec<f64> = (0..n)
        .map(|k| {
            // time in symbol periods
            let t = (k as f64 - half) / samples_per_symbol as f64;
            (-alpha * t * t).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    symmetrize(&mut taps);
    Ok(FilterTaps {
        taps,
        samples_per_symbol,
        span_symbols,
    })
}

/// Root-raised-cosine taps with unit energy.
pub fn design_rrc_filter(
    rolloff: f64,
    samples_per_symbol: usize,
    span_symbols: usize,
) -> Result<FilterTaps> {
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::invalid(format!(
            "rolloff must be in [0, 1], got {rolloff}"
        )));
    }
    check_sps_span(samples_per_symbol, span_symbols)?;
    let n = odd_length(span_symbols, samples_per_symbol);
    let half = (n / 2) as f64;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..n)
        .map(|k| {
            let t = (k as f64 - half) / samples_per_symbol as f64;
            rrc_at(t, b)
        })
        .collect();
    let e = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= e);
    symmetrize(&mut taps);
    Ok(FilterTaps {
        taps,
        samples_per_symbol,
        span_symbols,
    })
}

fn rrc_at(t: f64, b: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

fn symmetrize(taps: &mut [f64]) {
    let n = taps.len();
    for k in 0..n / 2 {
        let v = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = v;
        taps[n - 1 - k] = v;
    }
}

/// Zeroth-order modified Bessel function of the first kind.
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let y = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= y / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window value at position `x` in [-1, 1].
pub(crate) fn kaiser(x: f64, beta: f64, i0_beta: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - x * x).sqrt()) / i0_beta
}

/// Kaiser beta for a stopband attenuation in dB.
pub(crate) fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Linear convolution trimmed to `x.len()` outputs, centered on the filter's
/// middle tap so an odd symmetric filter introduces no delay.
pub fn filter_same(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let c = taps.len() / 2;
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            // y[i] = sum_k taps[k] * x[i + c - k]
            let k_lo = (i + c + 1).saturating_sub(n);
            let k_hi = (i + c).min(taps.len() - 1);
            for k in k_lo..=k_hi {
                acc += x[i + c - k] * taps[k];
            }
            acc
        })
        .collect()
}

/// Upsamples `symbols` by `sps` with zero stuffing and filters with `taps`,
/// producing `symbols.len() * sps` samples aligned so symbol `k` peaks at
/// sample `k * sps`. Only the nonzero input phase is visited per output.
pub fn interpolate_symbols(symbols: &[Complex64], taps: &[f64], sps: usize) -> Vec<Complex64> {
    let n_out = symbols.len() * sps;
    let c = (taps.len() / 2) as isize;
    let mut out = vec![Complex64::new(0.0, 0.0); n_out];
    for (i, y) in out.iter_mut().enumerate() {
        // y[i] = sum_k s[k] * h[c + i - k*sps]
        let i = i as isize;
        let sps_i = sps as isize;
        let k_hi = (i + c).div_euclid(sps_i);
        let k_lo_num = i + c - (taps.len() as isize - 1);
        let k_lo = if k_lo_num <= 0 {
            0
        } else {
            (k_lo_num + sps_i - 1) / sps_i
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let mut k = k_lo.max(0);
        while k <= k_hi && (k as usize) < symbols.len() {
            let idx = (c + i - k * sps_i) as usize;
            acc += symbols[k as usize] * taps[idx];
            k += 1;
        }
        *y = acc;
    }
    out
}
