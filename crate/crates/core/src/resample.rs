//! Rational polyphase resampling and fractional delay.
//!
//! The prototype lowpass is a Kaiser-windowed sinc designed for 80 dB of
//! stopband attenuation with its transition band centered on the lower of
//! the two Nyquist frequencies (passband to 0.45, stopband from 0.55 of the
//! smaller rate). Filter length grows with `max(up, down)`, so awkward
//! ratios cost memory but not per-sample work.

use crate::filter::{bessel_i0, kaiser, kaiser_beta, sinc};
use crate::{metrics, Complex64, Error, IqBuffer, Result};

const STOPBAND_DB: f64 = 80.0;
const MAX_DENOMINATOR: u64 = 1_000_000;
/// Half-length of the prototype per unit of `max(up, down)`.
const HALF_TAPS_PER_PHASE: usize = 26;

/// Best rational `p/q` for `x` with `q <= max_den`, via continued fractions.
/// Relative error allowed between a rate ratio and its fraction; rates
/// derived from the same clock agree to a few ulps.
const RATIO_TOLERANCE: f64 = 1e-14;

pub fn rational_approx(x: f64, max_den: u64) -> Option<(u64, u64)> {
    if !(x > 0.0 && x.is_finite()) {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a as f64;
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-15 * x || frac < 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    let ratio = h1 as f64 / k1 as f64;
    if (ratio - x).abs() <= RATIO_TOLERANCE * x {
        Some((h1, k1))
    } else {
        None
    }
}

/// Polyphase rational resampler; output sample `m` sits at input time
/// `m * down / up`, so the output is time-aligned with the input.
pub fn resample(buf: &IqBuffer, target_rate_hz: f64) -> Result<IqBuffer> {
    if !(target_rate_hz > 0.0 && target_rate_hz.is_finite()) {
        return Err(Error::invalid(format!(
            "target rate must be positive, got {target_rate_hz}"
        )));
    }
    let ratio = target_rate_hz / buf.sample_rate_hz;
    let (up, down) =
        rational_approx(ratio, MAX_DENOMINATOR).ok_or(Error::IrrationalRatio(ratio))?;
    let mut out = buf.map_samples(resample_by(&buf.samples, up as usize, down as usize));
    out.sample_rate_hz = target_rate_hz;
    Ok(out)
}

/// Like [`resample`], but refuses targets narrower than the signal's 99%
/// occupied bandwidth.
pub fn resample_strict(buf: &IqBuffer, target_rate_hz: f64) -> Result<IqBuffer> {
    if target_rate_hz < buf.sample_rate_hz {
        let occupied = metrics::occupied_bandwidth(buf, 0.99)?;
        if target_rate_hz < occupied {
            return Err(Error::Undersampled {
                target_hz: target_rate_hz,
                occupied_hz: occupied,
            });
        }
    }
    resample(buf, target_rate_hz)
}

fn prototype(up: usize, down: usize) -> Vec<f64> {
    let m = up.max(down);
    let half = HALF_TAPS_PER_PHASE * m;
    let n = 2 * half + 1;
    let fc = 0.5 / m as f64;
    let beta = kaiser_beta(STOPBAND_DB);
    let i0b = bessel_i0(beta);
    let mut h: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 - half as f64;
            2.0 * fc * sinc(2.0 * fc * t) * kaiser(t / half as f64, beta, i0b)
        })
        .collect();
    // unit DC gain per polyphase branch on average
    let s: f64 = h.iter().sum();
    h.iter_mut().for_each(|x| *x *= up as f64 / s);
    h
}

pub(crate) fn resample_by(x: &[Complex64], up: usize, down: usize) -> Vec<Complex64> {
    if up == down {
        return x.to_vec();
    }
    let g = gcd(up, down);
    let (up, down) = (up / g, down / g);
    let h = prototype(up, down);
    let c = h.len() / 2;
    let n_out = (x.len() * up).div_ceil(down);
    let n_in = x.len() as isize;
    (0..n_out)
        .map(|m| {
            // y[m] = sum_k x[k] h[c + m*down - k*up]
            let j0 = (m * down + c) as isize;
            let up_i = up as isize;
            let k_hi = (j0 / up_i).min(n_in - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = k_hi;
            while k >= 0 {
                let idx = j0 - k * up_i;
                if idx >= h.len() as isize {
                    break;
                }
                acc += x[k as usize] * h[idx as usize];
                k -= 1;
            }
            acc
        })
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

const DELAY_HALF_TAPS: isize = 16;

/// Delays the buffer by `delay_samples` (may be fractional) using a
/// Kaiser-windowed sinc interpolator. Output length equals input length;
/// samples shifted past the end are dropped and the start is zero-filled.
pub fn delay(buf: &IqBuffer, delay_samples: f64) -> Result<IqBuffer> {
    if !(delay_samples >= 0.0 && delay_samples.is_finite()) {
        return Err(Error::invalid(format!(
            "delay must be nonnegative, got {delay_samples}"
        )));
    }
    Ok(buf.map_samples(delay_samples_vec(&buf.samples, delay_samples)))
}

pub(crate) fn delay_samples_vec(x: &[Complex64], d: f64) -> Vec<Complex64> {
    let n = x.len();
    let whole = d.floor() as usize;
    let frac = d - d.floor();
    let zero = Complex64::new(0.0, 0.0);
    if frac < 1e-12 {
        let mut out = vec![zero; n];
        if whole < n {
            out[whole..].copy_from_slice(&x[..n - whole]);
        }
        return out;
    }
    let beta = kaiser_beta(STOPBAND_DB);
    let i0b = bessel_i0(beta);
    let span = (DELAY_HALF_TAPS + 1) as f64;
    // taps[j] weights x[n - whole - j] for j in -H..=H
    let mut taps: Vec<f64> = (-DELAY_HALF_TAPS..=DELAY_HALF_TAPS)
        .map(|j| {
            let t = j as f64 - frac;
            sinc(t) * kaiser(t / span, beta, i0b)
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    let n_i = n as isize;
    (0..n_i)
        .map(|i| {
            let base = i - whole as isize;
            let mut acc = zero;
            for (jj, &t) in taps.iter().enumerate() {
                let src = base - (jj as isize - DELAY_HALF_TAPS);
                if (0..n_i).contains(&src) {
                    acc += x[src as usize] * t;
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::filter_same;
    use crate::Rng;
    use rustfft::FftPlanner;
    use std::f64::consts::PI;

    fn bandlimited_noise(n: usize, seed: u64, fs: f64) -> IqBuffer {
        let mut r = Rng::new(seed);
        let white: Vec<Complex64> = (0..n).map(|_| r.complex_normal()).collect();
        // lowpass to a quarter of the band
        let taps: Vec<f64> = (-64i32..=64)
            .map(|k| 0.25 * sinc(0.25 * k as f64) * (0.5 + 0.5 * (PI * k as f64 / 65.0).cos()))
            .collect();
        IqBuffer::new(filter_same(&white, &taps), fs).unwrap()
    }

    fn peak_freq(buf: &IqBuffer) -> f64 {
        let mut v = buf.samples.clone();
        let n = v.len();
        FftPlanner::new().plan_fft_forward(n).process(&mut v);
        let k = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
        k * buf.sample_rate_hz / n as f64
    }

    #[test]
    fn rational_forms() {
        assert_eq!(rational_approx(1.5, 1_000_000), Some((3, 2)));
        assert_eq!(rational_approx(0.5, 1_000_000), Some((1, 2)));
        let gsm = 13e6 / 48.0 * 4.0;
        assert_eq!(rational_approx(15.36e6 / gsm, 1_000_000), Some((4608, 325)));
        assert_eq!(rational_approx(std::f64::consts::PI, 100), None);
    }

    #[test]
    fn same_rate_is_identity() {
        let b = bandlimited_noise(500, 1, 1e6);
        assert_eq!(resample(&b, 1e6).unwrap().samples, b.samples);
    }

    #[test]
    fn up_down_round_trip() {
        let b = bandlimited_noise(8192, 2, 1e6);
        let up = resample(&b, 2e6).unwrap();
        assert_eq!(up.len(), 2 * b.len());
        let back = resample(&up, 1e6).unwrap();
        assert_eq!(back.len(), b.len());
        // skip the filter transients at the edges
        let a = &b.samples[200..8000];
        let c = &back.samples[200..8000];
        let dot: Complex64 = a.iter().zip(c).map(|(x, y)| x * y.conj()).sum();
        let corr = dot.norm() / (crate::signal::energy(a) * crate::signal::energy(c)).sqrt();
        assert!(corr >= 0.999, "corr {corr}");
    }

    #[test]
    fn tone_frequency_preserved_3_over_2() {
        let fs = 1e6;
        let n = 4096;
        let f0 = 0.1 * fs;
        let tone: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f0 * k as f64 / fs))
            .collect();
        let b = IqBuffer::new(tone, fs).unwrap();
        let r = resample(&b, 1.5e6).unwrap();
        assert_eq!(r.len(), 6144);
        let bin = r.sample_rate_hz / r.len() as f64;
        assert!((peak_freq(&r) - f0).abs() <= bin);
    }

    #[test]
    fn passband_gain_flat() {
        // tones below 0.45 of the lower rate keep amplitude within 0.5 dB
        for (from, to) in [(1e6, 1.5e6), (1.5e6, 1e6), (3e6, 1e6)] {
            let low = f64::min(from, to);
            for frac in [0.05, 0.2, 0.4, 0.45] {
                let f0 = frac * low;
                let tone: Vec<Complex64> = (0..6000)
                    .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f0 * k as f64 / from))
                    .collect();
                let r = resample(&IqBuffer::new(tone, from).unwrap(), to).unwrap();
                let mid = &r.samples[r.len() / 4..3 * r.len() / 4];
                let amp = crate::signal::mean_power(mid).sqrt();
                assert!((20.0 * amp.log10()).abs() < 0.5, "{from}->{to} at {frac}: {amp}");
            }
        }
    }

    #[test]
    fn irrational_ratio_rejected() {
        let b = bandlimited_noise(100, 3, 1e6);
        assert!(matches!(
            resample(&b, 1e6 * std::f64::consts::PI),
            Err(Error::IrrationalRatio(_))
        ));
    }

    #[test]
    fn strict_mode_rejects_undersampling() {
        let b = bandlimited_noise(8192, 4, 1e6);
        assert!(matches!(
            resample_strict(&b, 0.1e6),
            Err(Error::Undersampled { .. })
        ));
        assert!(resample_strict(&b, 0.5e6).is_ok());
    }

    #[test]
    fn integer_delay_shifts() {
        let b = bandlimited_noise(100, 5, 1.0);
        let d = delay(&b, 3.0).unwrap();
        assert_eq!(&d.samples[3..], &b.samples[..97]);
        assert!(d.samples[..3].iter().all(|z| z.norm() == 0.0));
        assert_eq!(delay(&b, 0.0).unwrap().samples, b.samples);
    }

    #[test]
    fn fractional_delay_of_tone_is_phase_shift() {
        let f = 0.05;
        let tone: Vec<Complex64> = (0..400)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64))
            .collect();
        let b = IqBuffer::new(tone, 1.0).unwrap();
        let d = delay(&b, 2.3).unwrap();
        for k in 50..350 {
            let want = Complex64::from_polar(1.0, 2.0 * PI * f * (k as f64 - 2.3));
            assert!((d.samples[k] - want).norm() < 1e-3, "k={k}");
        }
    }
}
