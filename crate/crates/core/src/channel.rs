//! Propagation and mixing: ITU delay profiles, Jakes/Rician fading,
//! log-normal shadowing, offsets, AWGN, and the multi-source mixture.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::metrics::hann;
use crate::resample::{delay_samples_vec, resample_strict};
use crate::signal::{db_to_linear, frequency_shift, mean_power};
use crate::{Complex64, Error, IqBuffer, Result, Rng};

/// Length of the Doppler shaping filter, in low-rate samples.
pub const DOPPLER_FILTER_TAPS: usize = 512;
/// The Doppler process is synthesized at no less than this many samples per
/// Doppler-frequency period, then interpolated up.
const DOPPLER_OVERSAMPLE: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    PedA,
    PedB,
    VehA,
    VehB,
    Custom,
}

impl ProfileName {
    pub const STANDARD: [ProfileName; 4] = [
        ProfileName::PedA,
        ProfileName::PedB,
        ProfileName::VehA,
        ProfileName::VehB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileName::PedA => "ped_a",
            ProfileName::PedB => "ped_b",
            ProfileName::VehA => "veh_a",
            ProfileName::VehB => "veh_b",
            ProfileName::Custom => "custom",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "peda" | "pedestriana" => Ok(ProfileName::PedA),
            "pedb" | "pedestrianb" => Ok(ProfileName::PedB),
            "veha" | "vehiculara" => Ok(ProfileName::VehA),
            "vehb" | "vehicularb" => Ok(ProfileName::VehB),
            "custom" => Ok(ProfileName::Custom),
            _ => Err(Error::invalid(format!("unknown delay profile '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay_ns: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub taps: Vec<Tap>,
    #[serde(default)]
    pub name: Option<ProfileName>,
}

const PED_A: [(f64, f64); 4] = [(0.0, 0.0), (110.0, -9.7), (190.0, -19.2), (410.0, -22.8)];
const PED_B: [(f64, f64); 6] = [
    (0.0, 0.0),
    (200.0, -0.9),
    (800.0, -4.9),
    (1200.0, -8.0),
    (2300.0, -7.8),
    (3700.0, -23.9),
];
const VEH_A: [(f64, f64); 6] = [
    (0.0, 0.0),
    (310.0, -1.0),
    (710.0, -9.0),
    (1090.0, -10.0),
    (1730.0, -15.0),
    (2510.0, -20.0),
];
const VEH_B: [(f64, f64); 6] = [
    (0.0, -2.5),
    (300.0, 0.0),
    (8900.0, -12.8),
    (12900.0, -10.0),
    (17100.0, -25.2),
    (20000.0, -16.0),
];

/// Tap table for one of the ITU pedestrian/vehicular channels.
pub fn standard_profile(name: ProfileName) -> Result<DelayProfile> {
    let table: &[(f64, f64)] = match name {
        ProfileName::PedA => &PED_A,
        ProfileName::PedB => &PED_B,
        ProfileName::VehA => &VEH_A,
        ProfileName::VehB => &VEH_B,
        ProfileName::Custom => {
            return Err(Error::invalid("custom profiles have no built-in table"))
        }
    };
    Ok(DelayProfile {
        taps: table
            .iter()
            .map(|&(delay_ns, power_db)| Tap { delay_ns, power_db })
            .collect(),
        name: Some(name),
    })
}

impl DelayProfile {
    /// Single tap at zero delay.
    pub fn flat() -> Self {
        DelayProfile::custom(vec![Tap {
            delay_ns: 0.0,
            power_db: 0.0,
        }])
    }

    pub fn custom(taps: Vec<Tap>) -> Self {
        DelayProfile {
            taps,
            name: Some(ProfileName::Custom),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .taps
            .first()
            .ok_or_else(|| Error::invalid("delay profile has no taps"))?;
        if first.delay_ns != 0.0 {
            return Err(Error::invalid("first tap must be at zero delay"));
        }
        for w in self.taps.windows(2) {
            if !(w[1].delay_ns > w[0].delay_ns) {
                return Err(Error::invalid("tap delays must be strictly increasing"));
            }
        }
        if self.taps.iter().any(|t| !t.power_db.is_finite() || !t.delay_ns.is_finite()) {
            return Err(Error::invalid("tap values must be finite"));
        }
        Ok(())
    }

    /// Linear tap powers scaled to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps.iter().map(|t| db_to_linear(t.power_db)).collect();
        let total: f64 = lin.iter().sum();
        lin.iter().map(|p| p / total).collect()
    }

    pub fn max_delay_s(&self) -> f64 {
        self.taps.last().map_or(0.0, |t| t.delay_ns * 1e-9)
    }

    /// Power-weighted RMS delay spread.
    pub fn rms_delay_spread_s(&self) -> f64 {
        let p = self.normalized_powers();
        let mean: f64 = p.iter().zip(&self.taps).map(|(p, t)| p * t.delay_ns).sum();
        let sq: f64 = p.iter().zip(&self.taps).map(|(p, t)| p * t.delay_ns.powi(2)).sum();
        (sq - mean * mean).max(0.0).sqrt() * 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FadingModel {
    #[default]
    Rayleigh,
    Rician,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FadingSpec {
    pub model: FadingModel,
    /// LOS-to-scatter power ratio; ignored for Rayleigh.
    pub k_factor_db: f64,
    pub doppler_hz: f64,
    pub shadowing_sigma_db: f64,
}

impl Default for FadingSpec {
    fn default() -> Self {
        FadingSpec {
            model: FadingModel::Rayleigh,
            k_factor_db: 0.0,
            doppler_hz: 0.0,
            shadowing_sigma_db: 8.0,
        }
    }
}

impl FadingSpec {
    pub fn rayleigh(doppler_hz: f64) -> Self {
        FadingSpec {
            doppler_hz,
            shadowing_sigma_db: 0.0,
            ..Default::default()
        }
    }

    pub fn rician(k_factor_db: f64, doppler_hz: f64) -> Self {
        FadingSpec {
            model: FadingModel::Rician,
            k_factor_db,
            doppler_hz,
            shadowing_sigma_db: 0.0,
        }
    }

    pub fn with_shadowing(mut self, sigma_db: f64) -> Self {
        self.shadowing_sigma_db = sigma_db;
        self
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(self.doppler_hz >= 0.0) || !self.doppler_hz.is_finite() {
            return Err(Error::invalid("doppler_hz must be >= 0"));
        }
        if self.doppler_hz >= sample_rate_hz / 10.0 {
            return Err(Error::invalid(format!(
                "doppler {} Hz must be below a tenth of the {} Hz sample rate",
                self.doppler_hz, sample_rate_hz
            )));
        }
        if !(self.shadowing_sigma_db >= 0.0) || !self.shadowing_sigma_db.is_finite() {
            return Err(Error::invalid("shadowing_sigma_db must be >= 0"));
        }
        if self.model == FadingModel::Rician && !self.k_factor_db.is_finite() {
            return Err(Error::invalid("k_factor_db must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SourcePlacement {
    pub power_db: f64,
    pub delay_s: f64,
    pub freq_offset_hz: f64,
}

/// Young-Beaulieu sampled square root of the Clarke spectrum over `n` bins
/// with Doppler edge at bin `km`.
fn clarke_root(n: usize, km: usize) -> Vec<f64> {
    let mut f = vec![0.0; n];
    let kmf = km as f64;
    for k in 1..km {
        let v = (1.0 / (2.0 * (1.0 - (k as f64 / kmf).powi(2)).sqrt())).sqrt();
        f[k] = v;
        f[n - k] = v;
    }
    // the edge bin integrates the singularity instead of sampling it
    let edge = (kmf / 2.0 * (PI / 2.0 - ((kmf - 1.0) / (2.0 * kmf - 1.0).sqrt()).atan())).sqrt();
    f[km] = edge;
    f[n - km] = edge;
    f
}

/// Real, Hann-windowed, unit-energy FIR whose squared response follows the
/// Jakes spectrum with normalized Doppler `fd_norm` (cycles per sample).
pub fn doppler_filter(fd_norm: f64, n_taps: usize) -> Result<Vec<f64>> {
    let km = (fd_norm * n_taps as f64).round() as usize;
    if km < 2 || 2 * km >= n_taps {
        return Err(Error::invalid(format!(
            "normalized doppler {fd_norm} not representable with {n_taps} taps"
        )));
    }
    let spec = clarke_root(n_taps, km);
    let mut buf: Vec<Complex64> = spec.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n_taps).process(&mut buf);
    // zero-phase response sits at index 0; rotate it to the middle
    let half = n_taps / 2;
    let w = hann(n_taps);
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|i| buf[(i + n_taps - half) % n_taps].re * w[i])
        .collect();
    let e = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= e);
    Ok(taps)
}

/// Linear convolution via one zero-padded FFT.
fn fft_convolve(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let n_out = x.len() + h.len() - 1;
    let n = n_out.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[..x.len()].copy_from_slice(x);
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    for (d, &t) in b.iter_mut().zip(h) {
        *d = Complex64::new(t, 0.0);
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v / n as f64;
    }
    inv.process(&mut a);
    a.truncate(n_out);
    a
}

fn catmull_rom(p: [Complex64; 4], t: f64) -> Complex64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (p[1] * 2.0
        + (p[2] - p[0]) * t
        + (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) * t2
        + (p[1] * 3.0 - p[0] - p[2] * 3.0 + p[3]) * t3)
        * 0.5
}

/// Unit-power Rayleigh process with a Jakes Doppler spectrum.
fn jakes_process(doppler_hz: f64, n: usize, fs: f64, rng: &mut Rng) -> Result<Vec<Complex64>> {
    let up = ((fs / (DOPPLER_OVERSAMPLE * doppler_hz)).floor() as usize).max(1);
    let fs_low = fs / up as f64;
    let h = doppler_filter(doppler_hz / fs_low, DOPPLER_FILTER_TAPS)?;
    // three guard samples for the interpolator plus the filter warm-up
    let n_low = n.div_ceil(up) + 3;
    let white: Vec<Complex64> = (0..n_low + h.len() - 1)
        .map(|_| rng.complex_normal())
        .collect();
    let full = fft_convolve(&white, &h);
    let low = &full[h.len() - 1..h.len() - 1 + n_low];
    if up == 1 {
        return Ok(low[1..=n].to_vec());
    }
    Ok((0..n)
        .map(|i| {
            let j = i / up;
            let t = (i % up) as f64 / up as f64;
            catmull_rom([low[j], low[j + 1], low[j + 2], low[j + 3]], t)
        })
        .collect())
}

/// One unit-mean-power complex gain trajectory.
pub fn fading_process(
    spec: &FadingSpec,
    n_samples: usize,
    sample_rate_hz: f64,
    rng: &Rng,
) -> Result<Vec<Complex64>> {
    spec.validate(sample_rate_hz)?;
    let mut r = rng.clone();
    let scatter = if spec.doppler_hz == 0.0 {
        vec![r.complex_normal(); n_samples]
    } else {
        jakes_process(spec.doppler_hz, n_samples, sample_rate_hz, &mut r)?
    };
    match spec.model {
        FadingModel::Rayleigh => Ok(scatter),
        FadingModel::Rician => {
            let k = db_to_linear(spec.k_factor_db);
            let los = Complex64::from_polar((k / (k + 1.0)).sqrt(), 2.0 * PI * r.uniform());
            let s = (1.0 / (k + 1.0)).sqrt();
            Ok(scatter.into_iter().map(|z| los + z * s).collect())
        }
    }
}

/// Log-normal amplitude factor for one shadowing draw.
pub fn shadowing_gain(sigma_db: f64, rng: &mut Rng) -> f64 {
    if sigma_db == 0.0 {
        1.0
    } else {
        10f64.powf(sigma_db * rng.normal() / 20.0)
    }
}

/// Tapped delay line with independent fading per tap and one shadowing
/// draw for the whole link.
pub fn apply_multipath(
    buf: &IqBuffer,
    profile: &DelayProfile,
    spec: &FadingSpec,
    rng: &Rng,
) -> Result<IqBuffer> {
    profile.validate()?;
    let fs = buf.sample_rate_hz;
    if profile.max_delay_s() >= buf.duration_s() {
        return Err(Error::DelayTooLong {
            delay_s: profile.max_delay_s(),
            duration_s: buf.duration_s(),
        });
    }
    spec.validate(fs)?;
    let n = buf.len();
    let shadow = shadowing_gain(spec.shadowing_sigma_db, &mut rng.fork(u64::MAX));
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (l, (tap, p)) in profile.taps.iter().zip(profile.normalized_powers()).enumerate() {
        let g = fading_process(spec, n, fs, &rng.fork(l as u64))?;
        let delayed = delay_samples_vec(&buf.samples, tap.delay_ns * 1e-9 * fs);
        let a = p.sqrt() * shadow;
        for ((o, d), g) in out.iter_mut().zip(&delayed).zip(&g) {
            *o += d * g * a;
        }
    }
    Ok(buf.map_samples(out))
}

/// White complex Gaussian noise at `signal_power / 10^(snr/10)`.
pub fn awgn(n: usize, signal_power: f64, snr_db: f64, rng: &Rng) -> Vec<Complex64> {
    let sigma = (signal_power / db_to_linear(snr_db)).sqrt();
    let mut r = rng.clone();
    (0..n).map(|_| r.complex_normal() * sigma).collect()
}

/// Adds noise relative to the buffer's mean power. An infinite SNR
/// returns the input unchanged.
pub fn add_awgn(buf: &IqBuffer, snr_db: f64, rng: &Rng) -> Result<IqBuffer> {
    if snr_db == f64::INFINITY {
        return Ok(buf.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::invalid("snr_db is NaN"));
    }
    let p = buf.mean_power();
    if !(p > 0.0) {
        return Err(Error::ZeroPower);
    }
    let noise = awgn(buf.len(), p, snr_db, rng);
    Ok(buf.map_samples(buf.samples.iter().zip(&noise).map(|(x, w)| x + w).collect()))
}

/// Multipath channel for one source; `None` in a mix entry means an ideal
/// unit-gain link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub profile: DelayProfile,
    pub fading: FadingSpec,
}

#[derive(Debug, Clone)]
pub struct MixEntry {
    pub source: IqBuffer,
    pub placement: SourcePlacement,
    pub channel: Option<ChannelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixParams {
    pub common_rate_hz: f64,
    /// Output length; defaults to the longest resampled source.
    #[serde(default)]
    pub n_samples: Option<usize>,
    /// SNR against the clean mixture power; `None` adds no noise.
    #[serde(default)]
    pub noise_snr_db: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Mixture {
    pub mixture: IqBuffer,
    /// Each source after its channel, offsets and power scaling.
    pub components: Vec<IqBuffer>,
    pub noise: Option<Vec<Complex64>>,
}

/// Clean per-source contribution at the common rate, before summation.
pub fn propagate_source(
    entry: &MixEntry,
    common_rate_hz: f64,
    n_samples: Option<usize>,
    rng: &Rng,
) -> Result<IqBuffer> {
    let p = &entry.placement;
    if !(p.delay_s >= 0.0) || !p.power_db.is_finite() {
        return Err(Error::invalid("placement needs delay_s >= 0 and finite power_db"));
    }
    let mut x = resample_strict(&entry.source, common_rate_hz)?;
    if let Some(n) = n_samples {
        x.samples.resize(n, Complex64::new(0.0, 0.0));
    }
    if p.delay_s > 0.0 {
        if p.delay_s >= x.duration_s() {
            return Err(Error::DelayTooLong {
                delay_s: p.delay_s,
                duration_s: x.duration_s(),
            });
        }
        x = x.map_samples(delay_samples_vec(&x.samples, p.delay_s * common_rate_hz));
    }
    if let Some(ch) = &entry.channel {
        x = apply_multipath(&x, &ch.profile, &ch.fading, rng)?;
    }
    x = frequency_shift(&x, p.freq_offset_hz)?;
    let a = db_to_linear(p.power_db).sqrt();
    Ok(x.scaled(Complex64::new(a, 0.0)))
}

/// Sums propagated sources left to right, then adds noise. Source `i`
/// draws its channel from `rng.fork(i + 1)`; the noise uses `rng.fork(0)`.
pub fn mix_sources(entries: &[MixEntry], params: &MixParams, rng: &Rng) -> Result<Mixture> {
    if entries.is_empty() {
        return Err(Error::invalid("mixture needs at least one source"));
    }
    let mut components = entries
        .iter()
        .enumerate()
        .map(|(i, e)| propagate_source(e, params.common_rate_hz, params.n_samples, &rng.fork(i as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    let n = params
        .n_samples
        .unwrap_or_else(|| components.iter().map(IqBuffer::len).max().unwrap_or(0));
    for c in &mut components {
        c.samples.resize(n, Complex64::new(0.0, 0.0));
    }
    let clean = sum_components(&components, n);
    let (samples, noise) = match params.noise_snr_db {
        Some(snr) if snr.is_finite() => {
            let p = mean_power(&clean);
            if !(p > 0.0) {
                return Err(Error::ZeroPower);
            }
            let w = awgn(n, p, snr, &rng.fork(0));
            (clean.iter().zip(&w).map(|(x, v)| x + v).collect(), Some(w))
        }
        _ => (clean, None),
    };
    Ok(Mixture {
        mixture: IqBuffer::new(samples, params.common_rate_hz)?,
        components,
        noise,
    })
}

/// Left-to-right sample sum; the order is fixed so mixtures reproduce bit
/// for bit.
pub fn sum_components(components: &[IqBuffer], n: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for c in components {
        for (a, x) in acc.iter_mut().zip(&c.samples) {
            *a += x;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white(n: usize, fs: f64, seed: u64) -> IqBuffer {
        let mut r = Rng::new(seed);
        IqBuffer::new((0..n).map(|_| r.complex_normal()).collect(), fs).unwrap()
    }

    #[test]
    fn ped_a_table() {
        let p = standard_profile(ProfileName::PedA).unwrap();
        let d: Vec<f64> = p.taps.iter().map(|t| t.delay_ns).collect();
        let g: Vec<f64> = p.taps.iter().map(|t| t.power_db).collect();
        assert_eq!(d, vec![0.0, 110.0, 190.0, 410.0]);
        assert_eq!(g, vec![0.0, -9.7, -19.2, -22.8]);
    }

    #[test]
    fn profiles_normalize_and_validate() {
        for name in ProfileName::STANDARD {
            let p = standard_profile(name).unwrap();
            p.validate().unwrap();
            let s: f64 = p.normalized_powers().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert_eq!(name.name().parse::<ProfileName>().unwrap(), name);
        }
        assert!(standard_profile(ProfileName::Custom).is_err());
        assert!("hilly".parse::<ProfileName>().is_err());
        let bad = DelayProfile::custom(vec![
            Tap { delay_ns: 0.0, power_db: 0.0 },
            Tap { delay_ns: 0.0, power_db: -3.0 },
        ]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ped_a_delay_spread() {
        // ITU quotes ~45 ns RMS for Pedestrian A
        let s = standard_profile(ProfileName::PedA).unwrap().rms_delay_spread_s();
        assert!((s * 1e9 - 45.0).abs() < 2.0, "{s}");
    }

    #[test]
    fn zero_doppler_is_constant() {
        let g = fading_process(&FadingSpec::rayleigh(0.0), 1000, 1e6, &Rng::new(3)).unwrap();
        assert!(g.iter().all(|z| *z == g[0]));
    }

    #[test]
    fn doppler_limit_enforced() {
        assert!(fading_process(&FadingSpec::rayleigh(1e5), 10, 1e6, &Rng::new(0)).is_err());
    }

    #[test]
    fn doppler_filter_unit_energy() {
        let h = doppler_filter(1.0 / 20.0, DOPPLER_FILTER_TAPS).unwrap();
        assert_eq!(h.len(), DOPPLER_FILTER_TAPS);
        let e: f64 = h.iter().map(|t| t * t).sum();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jakes_autocorrelation_follows_bessel() {
        // R(tau) = J0(2 pi fd tau); first zero near fd*tau = 0.383
        let fs = 1e5;
        let fd = 100.0;
        let mut acc = vec![0.0; 3];
        let lags = [0usize, 383, 200];
        for s in 0..20 {
            let g = fading_process(&FadingSpec::rayleigh(fd), 200_000, fs, &Rng::new(s)).unwrap();
            for (a, &lag) in acc.iter_mut().zip(&lags) {
                let n = g.len() - lag;
                *a += (0..n).map(|k| (g[k + lag] * g[k].conj()).re).sum::<f64>() / n as f64;
            }
        }
        let r: Vec<f64> = acc.iter().map(|a| a / 20.0).collect();
        assert!((r[0] - 1.0).abs() < 0.05, "{r:?}");
        assert!(r[1].abs() < 0.1, "{r:?}");
        // J0(2 pi * 0.2) = 0.6425
        assert!((r[2] - 0.6425).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn rician_strong_los_has_small_spread() {
        let g = fading_process(&FadingSpec::rician(20.0, 50.0), 200_000, 1e5, &Rng::new(2)).unwrap();
        let env: Vec<f64> = g.iter().map(|z| z.norm()).collect();
        let m = env.iter().sum::<f64>() / env.len() as f64;
        let v = env.iter().map(|e| (e - m).powi(2)).sum::<f64>() / env.len() as f64;
        assert!(v.sqrt() / m < 0.12);
        let p = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.len() as f64;
        assert!((p - 1.0).abs() < 0.05);
    }

    #[test]
    fn flat_static_tap_is_scalar_gain() {
        let x = white(256, 1e6, 1);
        let y = apply_multipath(&x, &DelayProfile::flat(), &FadingSpec::rayleigh(0.0), &Rng::new(5)).unwrap();
        let g = y.samples[0] / x.samples[0];
        for (a, b) in x.samples.iter().zip(&y.samples) {
            assert!((a * g - b).norm() < 1e-12);
        }
    }

    #[test]
    fn static_channel_is_linear() {
        let prof = standard_profile(ProfileName::PedB).unwrap();
        let spec = FadingSpec::rayleigh(0.0);
        let x = white(4096, 30.72e6, 1);
        let y = white(4096, 30.72e6, 2);
        let sum = x.map_samples(x.samples.iter().zip(&y.samples).map(|(a, b)| a + b).collect());
        let r = Rng::new(9);
        let hx = apply_multipath(&x, &prof, &spec, &r).unwrap();
        let hy = apply_multipath(&y, &prof, &spec, &r).unwrap();
        let hs = apply_multipath(&sum, &prof, &spec, &r).unwrap();
        for k in 0..4096 {
            assert!((hs.samples[k] - hx.samples[k] - hy.samples[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn multipath_conserves_power_on_average() {
        let prof = standard_profile(ProfileName::VehA).unwrap();
        let spec = FadingSpec::rayleigh(0.0);
        let x = white(4096, 15.36e6, 1);
        let p_in = x.mean_power();
        let ratio = (0..200)
            .map(|s| apply_multipath(&x, &prof, &spec, &Rng::new(s)).unwrap().mean_power() / p_in)
            .sum::<f64>()
            / 200.0;
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn delay_longer_than_buffer_rejected() {
        let x = white(10, 1e6, 1);
        let prof = standard_profile(ProfileName::VehB).unwrap();
        assert!(matches!(
            apply_multipath(&x, &prof, &FadingSpec::rayleigh(0.0), &Rng::new(1)),
            Err(Error::DelayTooLong { .. })
        ));
    }

    #[test]
    fn awgn_hits_requested_snr() {
        let x = white(100_000, 1e6, 3);
        let y = add_awgn(&x, 0.0, &Rng::new(4)).unwrap();
        let noise: Vec<Complex64> = y.samples.iter().zip(&x.samples).map(|(a, b)| a - b).collect();
        let snr = 10.0 * (x.mean_power() / mean_power(&noise)).log10();
        assert!(snr.abs() < 0.2, "{snr}");
        // complex Gaussian: E|w|^4 / (E|w|^2)^2 = 2
        let p2 = mean_power(&noise);
        let p4 = noise.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / noise.len() as f64;
        assert!((p4 / (p2 * p2) - 2.0).abs() < 0.1);
        assert_eq!(add_awgn(&x, f64::INFINITY, &Rng::new(4)).unwrap(), x);
        let z = IqBuffer::new(vec![Complex64::new(0.0, 0.0); 4], 1e6).unwrap();
        assert!(matches!(add_awgn(&z, 10.0, &Rng::new(0)), Err(Error::ZeroPower)));
    }

    #[test]
    fn single_ideal_source_passes_through() {
        let x = white(1000, 1e6, 7);
        let e = MixEntry {
            source: x.clone(),
            placement: SourcePlacement::default(),
            channel: None,
        };
        let params = MixParams {
            common_rate_hz: 1e6,
            n_samples: None,
            noise_snr_db: None,
        };
        let m = mix_sources(&[e], &params, &Rng::new(0)).unwrap();
        assert_eq!(m.mixture.samples, x.samples);
    }

    #[test]
    fn mixture_is_components_plus_noise_bit_exact() {
        let mk = |seed| MixEntry {
            source: white(3000, 2e6, seed),
            placement: SourcePlacement {
                power_db: -3.0 * seed as f64,
                delay_s: 1e-6 * seed as f64,
                freq_offset_hz: 1e5 * seed as f64,
            },
            channel: Some(ChannelSpec {
                profile: standard_profile(ProfileName::PedA).unwrap(),
                fading: FadingSpec::rayleigh(300.0).with_shadowing(4.0),
            }),
        };
        let params = MixParams {
            common_rate_hz: 4e6,
            n_samples: Some(5000),
            noise_snr_db: Some(10.0),
        };
        let rng = Rng::new(11);
        let m = mix_sources(&[mk(1), mk(2), mk(3)], &params, &rng).unwrap();
        let s = sum_components(&m.components, 5000);
        let w = m.noise.as_ref().unwrap();
        for k in 0..5000 {
            assert_eq!(m.mixture.samples[k], s[k] + w[k]);
        }
        let again = mix_sources(&[mk(1), mk(2), mk(3)], &params, &rng).unwrap();
        assert_eq!(again.mixture, m.mixture);
    }

    #[test]
    fn uncorrelated_powers_add() {
        let mk = |seed| MixEntry {
            source: white(100_000, 1e6, seed),
            placement: SourcePlacement::default(),
            channel: None,
        };
        let params = MixParams {
            common_rate_hz: 1e6,
            n_samples: None,
            noise_snr_db: None,
        };
        let m = mix_sources(&[mk(1), mk(2)], &params, &Rng::new(0)).unwrap();
        let sum: f64 = m.components.iter().map(IqBuffer::mean_power).sum();
        assert!((m.mixture.mean_power() / sum - 1.0).abs() < 0.01);
    }
}
