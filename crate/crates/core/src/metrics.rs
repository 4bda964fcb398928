//! Signal-quality and separation-quality measurements.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::signal::{energy, linear_to_db};
use crate::{Complex64, Error, IqBuffer, Result};

pub const DEFAULT_SEGMENT: usize = 1024;
pub const DEFAULT_OVERLAP: f64 = 0.5;
/// Output SINR reported for an exact reconstruction.
pub const SINR_CEILING_DB: f64 = 100.0;

pub fn papr_db(buf: &IqBuffer) -> Result<f64> {
    let mean = buf.mean_power();
    if !(mean > 0.0) {
        return Err(Error::ZeroPower);
    }
    let peak = buf.samples.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    Ok(linear_to_db(peak / mean).max(0.0))
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos())
        .collect()
}

/// Two-sided power spectral density, frequencies ascending and centered on 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    /// Power per Hz.
    pub density: Vec<f64>,
}

impl Spectrum {
    pub fn bin_width_hz(&self) -> f64 {
        if self.freqs_hz.len() < 2 {
            return 0.0;
        }
        self.freqs_hz[1] - self.freqs_hz[0]
    }

    /// Integral of the density, equal to mean power.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_hz()
    }

    pub fn peak_freq_hz(&self) -> f64 {
        let k = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.freqs_hz[k]
    }

    pub fn to_db(&self) -> Vec<(f64, f64)> {
        self.freqs_hz
            .iter()
            .zip(&self.density)
            .map(|(&f, &p)| (f, 10.0 * p.max(1e-300).log10()))
            .collect()
    }
}

/// Hann-windowed Welch average.
pub fn psd_welch(buf: &IqBuffer, segment: usize, overlap_fraction: f64) -> Result<Spectrum> {
    if segment < 2 || segment > buf.len() {
        return Err(Error::invalid(format!(
            "segment {segment} must be in 2..={}",
            buf.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid(format!(
            "overlap fraction must be in [0, 1), got {overlap_fraction}"
        )));
    }
    let hop = ((segment as f64) * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    let w = hann(segment);
    let w_energy: f64 = w.iter().map(|x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let mut acc = vec![0.0; segment];
    let mut frame = vec![Complex64::new(0.0, 0.0); segment];
    let mut count = 0usize;
    let mut start = 0;
    while start + segment <= buf.len() {
        for (k, f) in frame.iter_mut().enumerate() {
            *f = buf.samples[start + k] * w[k];
        }
        fft.process(&mut frame);
        for (a, f) in acc.iter_mut().zip(&frame) {
            *a += f.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let fs = buf.sample_rate_hz;
    let scale = 1.0 / (count as f64 * fs * w_energy);
    let half = segment / 2;
    let mut freqs = Vec::with_capacity(segment);
    let mut density = Vec::with_capacity(segment);
    for i in 0..segment {
        let k = (i + segment - half) % segment;
        freqs.push((i as f64 - half as f64) * fs / segment as f64);
        density.push(acc[k] * scale);
    }
    Ok(Spectrum {
        freqs_hz: freqs,
        density,
    })
}

/// Welch segment used for buffers shorter than the default.
pub fn segment_for(len: usize) -> usize {
    if len >= DEFAULT_SEGMENT {
        DEFAULT_SEGMENT
    } else {
        let mut s = 1;
        while s * 2 <= len {
            s *= 2;
        }
        s
    }
}

/// Bandwidth holding `fraction` of total power, trimming `(1 - fraction)/2`
/// from each band edge of the Welch PSD.
pub fn occupied_bandwidth(buf: &IqBuffer, fraction: f64) -> Result<f64> {
    let spec = psd_welch(buf, segment_for(buf.len()), DEFAULT_OVERLAP)?;
    occupied_bandwidth_of(&spec, fraction)
}

pub fn occupied_bandwidth_of(spec: &Spectrum, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "fraction must be in (0, 1), got {fraction}"
        )));
    }
    let total: f64 = spec.density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    let tail = (1.0 - fraction) / 2.0 * total;
    let mut cum = 0.0;
    let mut lo = 0;
    for (k, p) in spec.density.iter().enumerate() {
        cum += p;
        if cum >= tail {
            lo = k;
            break;
        }
    }
    cum = 0.0;
    let mut hi = spec.density.len() - 1;
    for (k, p) in spec.density.iter().enumerate().rev() {
        cum += p;
        if cum >= tail {
            hi = k;
            break;
        }
    }
    Ok((hi.saturating_sub(lo)) as f64 * spec.bin_width_hz())
}

/// Magnitude STFT, rows are frames, columns are frequency bins ascending
/// from `-fs/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub n_frames: usize,
    pub n_bins: usize,
    pub hop: usize,
    pub sample_rate_hz: f64,
    /// Row-major `n_frames x n_bins`.
    pub magnitude: Vec<f64>,
}

impl Spectrogram {
    pub fn row(&self, frame: usize) -> &[f64] {
        &self.magnitude[frame * self.n_bins..(frame + 1) * self.n_bins]
    }

    pub fn freq_of_bin(&self, bin: usize) -> f64 {
        (bin as f64 - (self.n_bins / 2) as f64) * self.sample_rate_hz / self.n_bins as f64
    }

    pub fn frame_time_s(&self, frame: usize) -> f64 {
        (frame * self.hop) as f64 / self.sample_rate_hz
    }

    /// Signal energy implied by the STFT for a Hann window, assuming the
    /// squared window overlaps to a near-constant sum (true at 50% overlap).
    pub fn energy_estimate(&self) -> f64 {
        let w = hann(self.n_bins);
        let w2: f64 = w.iter().map(|x| x * x).sum();
        let s: f64 = self.magnitude.iter().map(|m| m * m).sum();
        s * self.hop as f64 / (self.n_bins as f64 * w2)
    }

    pub fn to_db(&self) -> Vec<f64> {
        self.magnitude
            .iter()
            .map(|m| 20.0 * m.max(1e-15).log10())
            .collect()
    }
}

pub fn stft_spectrogram(buf: &IqBuffer, window: usize, hop: usize) -> Result<Spectrogram> {
    if hop < 1 || window < hop {
        return Err(Error::invalid(format!(
            "need window >= hop >= 1, got window {window}, hop {hop}"
        )));
    }
    if window > buf.len() {
        return Err(Error::invalid(format!(
            "window {window} exceeds buffer length {}",
            buf.len()
        )));
    }
    let frames = stft(&buf.samples, window, hop);
    let half = window / 2;
    let mut magnitude = Vec::with_capacity(frames.len() * window);
    for f in &frames {
        for i in 0..window {
            magnitude.push(f[(i + window - half) % window].norm());
        }
    }
    Ok(Spectrogram {
        n_frames: frames.len(),
        n_bins: window,
        hop,
        sample_rate_hz: buf.sample_rate_hz,
        magnitude,
    })
}

/// Complex STFT with a periodic Hann window, FFT bin order, no padding.
pub fn stft(x: &[Complex64], window: usize, hop: usize) -> Vec<Vec<Complex64>> {
    let w = hann(window);
    let fft = FftPlanner::new().plan_fft_forward(window);
    let n_frames = if x.len() >= window {
        (x.len() - window) / hop + 1
    } else {
        0
    };
    (0..n_frames)
        .map(|m| {
            let s = m * hop;
            let mut f: Vec<Complex64> = (0..window).map(|k| x[s + k] * w[k]).collect();
            fft.process(&mut f);
            f
        })
        .collect()
}

/// Weighted overlap-add inverse of [`stft`]; samples not covered by any
/// frame with nonzero window weight come back as zero.
pub fn istft(frames: &[Vec<Complex64>], window: usize, hop: usize, len: usize) -> Vec<Complex64> {
    let w = hann(window);
    let ifft = FftPlanner::new().plan_fft_inverse(window);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut norm = vec![0.0; len];
    for (m, f) in frames.iter().enumerate() {
        let mut t = f.clone();
        ifft.process(&mut t);
        let s = m * hop;
        for k in 0..window {
            if s + k >= len {
                break;
            }
            out[s + k] += t[k] * (w[k] / window as f64);
            norm[s + k] += w[k] * w[k];
        }
    }
    for (o, n) in out.iter_mut().zip(&norm) {
        if *n > 1e-12 {
            *o /= *n;
        } else {
            *o = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Amplitude histogram of `|x| / rms` over `[0, 4)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn amplitude_histogram(buf: &IqBuffer, bins: usize) -> Result<Histogram> {
    let rms = buf.mean_power().sqrt();
    if !(rms > 0.0) {
        return Err(Error::ZeroPower);
    }
    let top = 4.0;
    let mut counts = vec![0u64; bins];
    for z in &buf.samples {
        let a = z.norm() / rms;
        let k = ((a / top) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let bin_edges = (0..=bins).map(|k| top * k as f64 / bins as f64).collect();
    Ok(Histogram { bin_edges, counts })
}

/// RMS error vector magnitude relative to the reference's RMS.
pub fn evm(measured: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if measured.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: measured.len(),
        });
    }
    let err: f64 = measured
        .iter()
        .zip(reference)
        .map(|(m, r)| (m - r).norm_sqr())
        .sum();
    let re = energy(reference);
    if !(re > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok((err / re).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub papr_db: f64,
    pub obw_hz: f64,
    pub mean_power_db: f64,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub amplitude_histogram: Histogram,
    /// `(frequency Hz, power dB/Hz)` pairs.
    pub psd: Vec<(f64, f64)>,
}

pub fn report(buf: &IqBuffer) -> Result<MetricsReport> {
    let spec = psd_welch(buf, segment_for(buf.len()), DEFAULT_OVERLAP)?;
    Ok(MetricsReport {
        papr_db: papr_db(buf)?,
        obw_hz: occupied_bandwidth_of(&spec, 0.99)?,
        mean_power_db: linear_to_db(buf.mean_power()),
        sample_rate_hz: buf.sample_rate_hz,
        n_samples: buf.len(),
        amplitude_histogram: amplitude_histogram(buf, 50)?,
        psd: spec.to_db(),
    })
}

/// Per-source SINR before and after separation.
///
/// `per_source_*` and `improvement_db` are indexed by reference.
/// `permutation[i]` is the estimate assigned to reference `i`, and
/// `scales[i]` is the complex gain that maps that estimate onto the
/// reference in the least-squares sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrScore {
    pub per_source_sinr_in_db: Vec<f64>,
    pub per_source_sinr_out_db: Vec<f64>,
    pub improvement_db: Vec<f64>,
    pub permutation: Vec<usize>,
    pub scales: Vec<Complex64>,
}

impl SinrScore {
    pub fn mean_improvement_db(&self) -> f64 {
        self.improvement_db.iter().sum::<f64>() / self.improvement_db.len() as f64
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // a^H b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// SINR of `estimate` as a copy of `reference`: the estimate is split into
/// its projection on the reference and an orthogonal residual.
fn projected_sinr_db(estimate: &[Complex64], reference: &[Complex64]) -> f64 {
    let ee = energy(estimate);
    let rr = energy(reference);
    if ee <= 0.0 || rr <= 0.0 {
        return -SINR_CEILING_DB;
    }
    let c = inner(reference, estimate);
    let rho2 = (c.norm_sqr() / (ee * rr)).min(1.0);
    let residual = 1.0 - rho2;
    if residual <= 10f64.powf(-SINR_CEILING_DB / 10.0) * rho2 {
        return SINR_CEILING_DB;
    }
    linear_to_db(rho2 / residual).clamp(-SINR_CEILING_DB, SINR_CEILING_DB)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub const MAX_ALIGNED_SOURCES: usize = 8;

/// Permutation- and scale-aligned SINR improvement of separated estimates.
///
/// Input SINR of source `i` is `|r_i|^2 / |mixture - r_i|^2`. Output SINR
/// projects the assigned estimate onto `r_i` and treats the orthogonal
/// remainder as interference plus noise. The assignment maximizes the sum
/// of output SINRs over all permutations.
pub fn sinr_improvement(
    estimates: &[IqBuffer],
    references: &[IqBuffer],
    mixture: &IqBuffer,
) -> Result<SinrScore> {
    if references.is_empty() {
        return Err(Error::invalid("at least one reference is required"));
    }
    if estimates.len() != references.len() {
        return Err(Error::invalid(format!(
            "{} estimates for {} references",
            estimates.len(),
            references.len()
        )));
    }
    if references.len() > MAX_ALIGNED_SOURCES {
        return Err(Error::invalid(format!(
            "at most {MAX_ALIGNED_SOURCES} sources can be aligned"
        )));
    }
    let n = mixture.len();
    for b in estimates.iter().chain(references) {
        if b.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: b.len(),
            });
        }
    }
    let sinr_in: Vec<f64> = references
        .iter()
        .map(|r| {
            let rest: Vec<Complex64> = mixture
                .samples
                .iter()
                .zip(&r.samples)
                .map(|(m, s)| m - s)
                .collect();
            let pr = energy(&r.samples);
            let pi = energy(&rest);
            if pi <= 0.0 {
                SINR_CEILING_DB
            } else {
                linear_to_db(pr / pi).clamp(-SINR_CEILING_DB, SINR_CEILING_DB)
            }
        })
        .collect();
    let k = references.len();
    // table[i][j]: output SINR of estimate j against reference i
    let table: Vec<Vec<f64>> = references
        .iter()
        .map(|r| {
            estimates
                .iter()
                .map(|e| projected_sinr_db(&e.samples, &r.samples))
                .collect()
        })
        .collect();
    let best = permutations(k)
        .into_iter()
        .max_by(|a, b| {
            let sa: f64 = a.iter().enumerate().map(|(i, &j)| table[i][j]).sum();
            let sb: f64 = b.iter().enumerate().map(|(i, &j)| table[i][j]).sum();
            sa.total_cmp(&sb)
        })
        .expect("at least one permutation");
    let sinr_out: Vec<f64> = best.iter().enumerate().map(|(i, &j)| table[i][j]).collect();
    let scales = best
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let e = &estimates[j].samples;
            let ee = energy(e);
            if ee > 0.0 {
                inner(e, &references[i].samples) / ee
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let improvement = sinr_out.iter().zip(&sinr_in).map(|(o, i)| o - i).collect();
    Ok(SinrScore {
        per_source_sinr_in_db: sinr_in,
        per_source_sinr_out_db: sinr_out,
        improvement_db: improvement,
        permutation: best,
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    fn tone(n: usize, f_cyc: f64, fs: f64) -> IqBuffer {
        IqBuffer::new(
            (0..n)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f_cyc * k as f64))
                .collect(),
            fs,
        )
        .unwrap()
    }

    fn noise(n: usize, seed: u64, fs: f64) -> IqBuffer {
        let mut r = Rng::new(seed);
        IqBuffer::new((0..n).map(|_| r.complex_normal()).collect(), fs).unwrap()
    }

    #[test]
    fn papr_examples() {
        assert_eq!(papr_db(&tone(100, 0.1, 1.0)).unwrap().abs() < 1e-12, true);
        let imp = IqBuffer::new(
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
            1.0,
        )
        .unwrap();
        assert!((papr_db(&imp).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        let z = IqBuffer::new(vec![Complex64::new(0.0, 0.0); 4], 1.0).unwrap();
        assert_eq!(papr_db(&z), Err(Error::ZeroPower));
    }

    #[test]
    fn papr_invariant_to_complex_scale() {
        let b = noise(4096, 1, 1.0);
        let s = b.scaled(Complex64::new(-3.0, 7.5));
        assert!((papr_db(&b).unwrap() - papr_db(&s).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn welch_tone_peak_and_parseval() {
        let fs = 1e6;
        let t = tone(16384, 0.1234, fs);
        let s = psd_welch(&t, 1024, 0.5).unwrap();
        assert!((s.peak_freq_hz() - 0.1234 * fs).abs() <= s.bin_width_hz());
        let n = noise(65536, 2, fs);
        let s = psd_welch(&n, 1024, 0.5).unwrap();
        assert!((s.total_power() / n.mean_power() - 1.0).abs() < 0.01);
    }

    #[test]
    fn welch_variance_drops_with_averaging() {
        // same segment length, more data -> smoother estimate
        let n = noise(1 << 16, 3, 1.0);
        let var = |s: &Spectrum| {
            let m = s.density.iter().sum::<f64>() / s.density.len() as f64;
            s.density.iter().map(|d| (d - m).powi(2)).sum::<f64>() / s.density.len() as f64
                / (m * m)
        };
        let short = IqBuffer::new(n.samples[..4096].to_vec(), 1.0).unwrap();
        let a = psd_welch(&short, 256, 0.5).unwrap();
        let b = psd_welch(&n, 256, 0.5).unwrap();
        assert!(var(&b) < var(&a));
    }

    #[test]
    fn welch_rejects_large_segment() {
        assert!(psd_welch(&noise(100, 1, 1.0), 128, 0.5).is_err());
    }

    #[test]
    fn obw_tone_and_noise() {
        let fs = 1e6;
        // bin-centred tone
        let t = tone(16384, 100.0 / 1024.0, fs);
        let spec = psd_welch(&t, 1024, 0.5).unwrap();
        let obw = occupied_bandwidth(&t, 0.99).unwrap();
        assert!(obw <= 2.0 * spec.bin_width_hz(), "{obw}");
        let n = noise(1 << 17, 4, fs);
        let obw = occupied_bandwidth(&n, 0.99).unwrap();
        assert!((obw / (0.99 * fs) - 1.0).abs() < 0.02, "{obw}");
        assert!(occupied_bandwidth(&n, 1.0).is_err());
        assert!(occupied_bandwidth(&n, 0.0).is_err());
    }

    #[test]
    fn stft_shapes_and_ridges() {
        let fs = 1024.0;
        let t = tone(4096, 0.25, fs);
        let s = stft_spectrogram(&t, 256, 128).unwrap();
        assert_eq!(s.n_frames, (4096 - 256) / 128 + 1);
        assert_eq!(s.n_bins, 256);
        let ridge = 128 + 64;
        for f in 0..s.n_frames {
            let row = s.row(f);
            let k = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(k, ridge);
            assert!((s.freq_of_bin(k) - 256.0).abs() < 1e-9);
        }
        assert!(stft_spectrogram(&t, 64, 128).is_err());
        assert!(stft_spectrogram(&t, 8192, 128).is_err());
    }

    #[test]
    fn stft_time_disjoint_tones() {
        let fs = 1024.0;
        let mut x = tone(4096, 0.1, fs).samples;
        let y = tone(4096, -0.3, fs).samples;
        x[2048..].copy_from_slice(&y[2048..]);
        let b = IqBuffer::new(x, fs).unwrap();
        let s = stft_spectrogram(&b, 256, 256).unwrap();
        let b1 = 128 + (0.1f64 * 256.0).round() as usize;
        let b2 = (128.0f64 - 0.3 * 256.0).round() as usize;
        for f in 0..s.n_frames {
            let row = s.row(f);
            if f < 8 {
                assert!(row[b1] > 10.0 * row[b2]);
            } else {
                assert!(row[b2] > 10.0 * row[b1]);
            }
        }
    }

    #[test]
    fn stft_energy_bookkeeping() {
        let n = noise(1 << 15, 5, 1.0);
        let s = stft_spectrogram(&n, 512, 256).unwrap();
        let covered = (s.n_frames - 1) * 256 + 512;
        let e = energy(&n.samples[..covered]);
        assert!((s.energy_estimate() / e - 1.0).abs() < 0.05);
    }

    #[test]
    fn istft_inverts_interior() {
        let n = noise(4096, 6, 1.0);
        let f = stft(&n.samples, 256, 128);
        let y = istft(&f, 256, 128, n.len());
        for k in 128..3968 {
            assert!((y[k] - n.samples[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn histogram_counts_everything() {
        let n = noise(1000, 7, 1.0);
        let h = amplitude_histogram(&n, 20).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert_eq!(h.bin_edges.len(), 21);
    }

    #[test]
    fn sinr_perfect_separation_hits_ceiling() {
        let a = noise(4096, 10, 1.0);
        let b = noise(4096, 11, 1.0);
        let mix = a.map_samples(a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect());
        let s = sinr_improvement(&[a.clone(), b.clone()], &[a.clone(), b.clone()], &mix).unwrap();
        for i in 0..2 {
            assert!(s.per_source_sinr_in_db[i].abs() < 0.2);
            assert_eq!(s.per_source_sinr_out_db[i], SINR_CEILING_DB);
        }
        assert_eq!(s.permutation, vec![0, 1]);
    }

    #[test]
    fn sinr_mixture_as_estimate_is_no_gain() {
        let a = noise(8192, 12, 1.0);
        let b = noise(8192, 13, 1.0);
        let mix = a.map_samples(a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect());
        let s = sinr_improvement(&[mix.clone(), mix.clone()], &[a, b], &mix).unwrap();
        for d in &s.improvement_db {
            assert!(d.abs() < 0.5, "{d}");
        }
    }

    #[test]
    fn sinr_permutation_and_scale_invariant() {
        let a = noise(4096, 14, 1.0);
        let b = noise(4096, 15, 1.0);
        let c = noise(4096, 16, 1.0);
        let mix = a.map_samples(
            (0..4096)
                .map(|k| a.samples[k] + b.samples[k] + 0.3 * c.samples[k])
                .collect(),
        );
        // imperfect estimates
        let ea = a.map_samples((0..4096).map(|k| a.samples[k] + 0.1 * b.samples[k]).collect());
        let eb = b.map_samples((0..4096).map(|k| b.samples[k] + 0.2 * c.samples[k]).collect());
        let s1 = sinr_improvement(&[ea.clone(), eb.clone()], &[a.clone(), b.clone()], &mix).unwrap();
        let g1 = Complex64::new(0.0, -2.5);
        let g2 = Complex64::new(0.3, 0.4);
        let s2 = sinr_improvement(&[eb.scaled(g2), ea.scaled(g1)], &[a, b], &mix).unwrap();
        assert_eq!(s2.permutation, vec![1, 0]);
        for i in 0..2 {
            assert!((s1.improvement_db[i] - s2.improvement_db[i]).abs() < 1e-9);
        }
        // scale maps the estimate back onto the reference
        assert!((s2.scales[0] * g1 - s1.scales[0]).norm() < 1e-9);
    }

    #[test]
    fn sinr_rejects_bad_shapes() {
        let a = noise(100, 1, 1.0);
        let short = noise(50, 1, 1.0);
        assert!(sinr_improvement(&[a.clone(), a.clone()], &[a.clone()], &a).is_err());
        assert!(sinr_improvement(&[short], &[a.clone()], &a).is_err());
        assert!(sinr_improvement(&[], &[], &a).is_err());
    }
}
