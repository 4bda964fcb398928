use rfmix_core::channel::{
    apply_multipath, fading_process, standard_profile, FadingSpec, ProfileName,
};
use rfmix_core::metrics::psd_welch;
use rfmix_core::{IqBuffer, Rng};

/// Pools one-in-64 envelope samples from independent trajectories so the
/// KS statistic sees (nearly) independent draws.
fn pooled_envelope(n_total: usize) -> Vec<f64> {
    let fs = 1.6e6;
    let fd = fs / 16.0 - 1.0;
    let per = 1 << 20;
    let stride = 64;
    let mut env = Vec::with_capacity(n_total);
    let mut seed = 0;
    while env.len() < n_total {
        let g = fading_process(&FadingSpec::rayleigh(fd), per, fs, &Rng::new(seed)).unwrap();
        env.extend(g.iter().step_by(stride).map(|z| z.norm()));
        seed += 1;
    }
    env.truncate(n_total);
    env
}

fn ks_rayleigh(env: &mut [f64]) -> f64 {
    env.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = env.len() as f64;
    env.iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = 1.0 - (-r * r).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn rayleigh_envelope_passes_ks_at_one_percent() {
    let mut env = pooled_envelope(1_000_000);
    let p = env.iter().map(|r| r * r).sum::<f64>() / env.len() as f64;
    assert!((p - 1.0).abs() < 0.02, "mean power {p}");
    let d = ks_rayleigh(&mut env);
    let crit = 1.628 / (env.len() as f64).sqrt();
    assert!(d < crit, "D = {d}, critical {crit}");
}

/// Largest minus smallest PSD level, in dB, across the central 80% of the
/// band, of white noise passed through one Pedestrian A realization.
fn ped_a_ripple_db(seed: u64) -> f64 {
    let fs = 30.72e6;
    let n = 1 << 16;
    let mut r = Rng::new(10_000 + seed);
    let x = IqBuffer::new((0..n).map(|_| r.complex_normal()).collect(), fs).unwrap();
    let prof = standard_profile(ProfileName::PedA).unwrap();
    let y = apply_multipath(&x, &prof, &FadingSpec::rayleigh(0.0), &Rng::new(seed)).unwrap();
    let sx = psd_welch(&x, 256, 0.5).unwrap();
    let sy = psd_welch(&y, 256, 0.5).unwrap();
    let ratios: Vec<f64> = sx
        .freqs_hz
        .iter()
        .zip(sx.density.iter().zip(&sy.density))
        .filter(|(f, _)| f.abs() <= 0.4 * fs)
        .map(|(_, (a, b))| 10.0 * (b / a).log10())
        .collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    hi - lo
}

#[test]
fn ped_a_is_frequency_selective() {
    let seeds = 60;
    let hits = (0..seeds).filter(|&s| ped_a_ripple_db(s) > 3.0).count();
    assert!(hits as f64 / seeds as f64 >= 0.9, "{hits}/{seeds}");
}
