//! Downlink WCDMA: OVSF channelization, Gold-code scrambling and RRC chip
//! shaping at 3.84 Mcps.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::filter::{design_rrc_filter, interpolate_symbols};
use crate::signal::db_to_linear;
use crate::waveform::Payload;
use crate::{Complex64, Error, IqBuffer, Result, Rng, Standard};

pub const CHIP_RATE_HZ: f64 = 3.84e6;
pub const RRC_ROLLOFF: f64 = 0.22;
pub const FRAME_CHIPS: usize = 38_400;
/// Registers in each of the two Gold-pair LFSRs.
const GOLD_STAGES: usize = 25;
const Q_BRANCH_OFFSET: usize = 131_072;
pub const MAX_SCRAMBLING_CODE: u32 = (1 << 18) - 2;
pub const MAX_SCRAMBLING_LENGTH: usize = (1 << 25) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UmtsModulation {
    #[default]
    Qpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub spreading_factor: usize,
    pub code_index: usize,
    pub power_db: f64,
    #[serde(default)]
    pub data_bits: Payload,
    #[serde(default)]
    pub modulation: UmtsModulation,
}

impl UserSpec {
    pub fn new(spreading_factor: usize, code_index: usize, power_db: f64) -> Self {
        UserSpec {
            spreading_factor,
            code_index,
            power_db,
            data_bits: Payload::Random,
            modulation: UmtsModulation::Qpsk,
        }
    }

    pub fn amplitude(&self) -> f64 {
        db_to_linear(self.power_db).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UmtsConfig {
    pub users: Vec<UserSpec>,
    pub scrambling_code_id: u32,
    pub samples_per_chip: usize,
    pub duration_chips: usize,
    /// RRC length in chips on each side combined.
    pub rrc_span_chips: usize,
}

impl Default for UmtsConfig {
    fn default() -> Self {
        UmtsConfig {
            users: vec![
                UserSpec::new(8, 1, 0.0),
                UserSpec::new(16, 4, -3.0),
                UserSpec::new(32, 12, -3.0),
                UserSpec::new(64, 40, -6.0),
            ],
            scrambling_code_id: 0,
            samples_per_chip: 4,
            duration_chips: 3840,
            rrc_span_chips: 16,
        }
    }
}

impl UmtsConfig {
    pub fn sample_rate_hz(&self) -> f64 {
        CHIP_RATE_HZ * self.samples_per_chip as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::invalid("at least one user is required"));
        }
        if self.samples_per_chip < 2 {
            return Err(Error::invalid("samples_per_chip must be >= 2"));
        }
        if self.duration_chips == 0 {
            return Err(Error::invalid("duration_chips must be >= 1"));
        }
        if self.scrambling_code_id > MAX_SCRAMBLING_CODE {
            return Err(Error::invalid(format!(
                "scrambling code {} out of range",
                self.scrambling_code_id
            )));
        }
        for u in &self.users {
            check_code(u.spreading_factor, u.code_index)?;
            if !u.power_db.is_finite() {
                return Err(Error::invalid("user power must be finite"));
            }
        }
        for (i, a) in self.users.iter().enumerate() {
            for b in &self.users[i + 1..] {
                if codes_conflict(
                    (a.spreading_factor, a.code_index),
                    (b.spreading_factor, b.code_index),
                ) {
                    return Err(Error::CodeTreeConflict {
                        sf_a: a.spreading_factor,
                        index_a: a.code_index,
                        sf_b: b.spreading_factor,
                        index_b: b.code_index,
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_code(sf: usize, index: usize) -> Result<()> {
    if !sf.is_power_of_two() || !(4..=512).contains(&sf) {
        return Err(Error::invalid(format!(
            "spreading factor must be a power of two in 4..=512, got {sf}"
        )));
    }
    if index >= sf {
        return Err(Error::invalid(format!(
            "code index {index} must be below spreading factor {sf}"
        )));
    }
    Ok(())
}

/// True when one code is the other or lies on its path to the tree root.
pub fn codes_conflict(a: (usize, usize), b: (usize, usize)) -> bool {
    let (short, long) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    let shift = (long.0 / short.0).trailing_zeros();
    long.1 >> shift == short.1
}

/// Channelization code `index` at spreading factor `sf`, chips in {+1, -1}.
pub fn ovsf_code(sf: usize, index: usize) -> Result<Vec<i8>> {
    if !sf.is_power_of_two() || index >= sf {
        return Err(Error::invalid(format!(
            "invalid OVSF code sf={sf} index={index}"
        )));
    }
    let depth = sf.trailing_zeros();
    let mut code = vec![1i8];
    // walk from the root; bit (depth-1-level) of index picks the branch
    for level in 0..depth {
        let bit = (index >> (depth - 1 - level)) & 1;
        let mut next = code.clone();
        if bit == 0 {
            next.extend_from_slice(&code);
        } else {
            next.extend(code.iter().map(|c| -c));
        }
        code = next;
    }
    Ok(code)
}

struct GoldTables {
    x: Vec<u8>,
    y: Vec<u8>,
}

/// Chips of x and y needed for any valid code id over one frame.
const TABLE_LEN: usize = MAX_SCRAMBLING_CODE as usize + 1 + FRAME_CHIPS + Q_BRANCH_OFFSET;

fn gold_tables() -> &'static GoldTables {
    static TABLES: OnceLock<GoldTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        // x: 1 + X^3 + X^25 from state 1,0,...,0; y: 1 + X + X^2 + X^3 + X^25 from all ones
        let mut x = vec![0u8; TABLE_LEN];
        let mut y = vec![0u8; TABLE_LEN];
        x[0] = 1;
        for v in y.iter_mut().take(GOLD_STAGES) {
            *v = 1;
        }
        for i in 0..TABLE_LEN - GOLD_STAGES {
            x[i + GOLD_STAGES] = x[i + 3] ^ x[i];
            y[i + GOLD_STAGES] = y[i + 3] ^ y[i + 2] ^ y[i + 1] ^ y[i];
        }
        GoldTables { x, y }
    })
}

fn gold_bit(t: &GoldTables, n: usize, i: usize) -> u8 {
    t.x[i + n] ^ t.y[i]
}

/// Complex scrambling code `code_id`, unit modulus, repeating every
/// 38400-chip frame. The code id selects the x-sequence shift.
pub fn gold_scrambling(code_id: u32, length_chips: usize) -> Result<Vec<Complex64>> {
    if code_id > MAX_SCRAMBLING_CODE {
        return Err(Error::invalid(format!(
            "scrambling code {code_id} out of range 0..={MAX_SCRAMBLING_CODE}"
        )));
    }
    if length_chips > MAX_SCRAMBLING_LENGTH {
        return Err(Error::invalid(format!(
            "scrambling length {length_chips} exceeds {MAX_SCRAMBLING_LENGTH}"
        )));
    }
    let t = gold_tables();
    let n = code_id as usize;
    let frame: Vec<Complex64> = (0..FRAME_CHIPS.min(length_chips))
        .map(|i| {
            let zi = gold_bit(t, n, i);
            let zq = gold_bit(t, n, i + Q_BRANCH_OFFSET);
            Complex64::new(
                (1.0 - 2.0 * zi as f64) * FRAC_1_SQRT_2,
                (1.0 - 2.0 * zq as f64) * FRAC_1_SQRT_2,
            )
        })
        .collect();
    Ok((0..length_chips).map(|i| frame[i % FRAME_CHIPS]).collect())
}

/// Gray-mapped unit-power QPSK from bit pairs.
pub fn qpsk(bits: &[u8]) -> Vec<Complex64> {
    bits.chunks_exact(2)
        .map(|b| {
            Complex64::new(
                (1.0 - 2.0 * b[0] as f64) * FRAC_1_SQRT_2,
                (1.0 - 2.0 * b[1] as f64) * FRAC_1_SQRT_2,
            )
        })
        .collect()
}

/// Per-user QPSK symbols drawn for a config; user `i` uses `rng.fork(i)`.
pub fn user_symbols(cfg: &UmtsConfig, rng: &Rng) -> Result<Vec<Vec<Complex64>>> {
    cfg.users
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let n_sym = cfg.duration_chips.div_ceil(u.spreading_factor);
            let mut r = rng.fork(100 + i as u64);
            Ok(qpsk(&u.data_bits.take(2 * n_sym, &mut r)?))
        })
        .collect()
}

/// Scrambled multi-user chip stream before pulse shaping.
pub fn spread_and_scramble(cfg: &UmtsConfig, symbols: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
    let n = cfg.duration_chips;
    let mut chips = vec![Complex64::new(0.0, 0.0); n];
    for (u, syms) in cfg.users.iter().zip(symbols) {
        let code = ovsf_code(u.spreading_factor, u.code_index)?;
        let a = u.amplitude();
        let sf = u.spreading_factor;
        for (k, c) in chips.iter_mut().enumerate() {
            *c += syms[k / sf] * (a * code[k % sf] as f64);
        }
    }
    let scramble = gold_scrambling(cfg.scrambling_code_id, n)?;
    for (c, s) in chips.iter_mut().zip(&scramble) {
        *c *= s;
    }
    Ok(chips)
}

pub fn generate_umts(cfg: &UmtsConfig, rng: &Rng) -> Result<IqBuffer> {
    cfg.validate()?;
    let symbols = user_symbols(cfg, rng)?;
    let chips = spread_and_scramble(cfg, &symbols)?;
    let sps = cfg.samples_per_chip;
    let rrc = design_rrc_filter(RRC_ROLLOFF, sps, cfg.rrc_span_chips.max(2))?;
    let gain = (sps as f64).sqrt();
    let samples = interpolate_symbols(&chips, &rrc.taps, sps)
        .into_iter()
        .map(|z| z * gain)
        .collect();
    Ok(IqBuffer::new(samples, cfg.sample_rate_hz())?.with_label(Standard::Umts, rng.seed()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::filter_same;
    use crate::metrics::{evm, occupied_bandwidth};

    /// All codes at `sf` by building the tree breadth-first.
    fn ovsf_tree(sf: usize) -> Vec<Vec<i8>> {
        let mut level = vec![vec![1i8]];
        while level[0].len() < sf {
            let mut next = Vec::new();
            for c in &level {
                let mut a = c.clone();
                a.extend_from_slice(c);
                let mut b = c.clone();
                b.extend(c.iter().map(|x| -x));
                next.push(a);
                next.push(b);
            }
            level = next;
        }
        level
    }

    #[test]
    fn ovsf_examples() {
        assert_eq!(ovsf_code(1, 0).unwrap(), vec![1]);
        assert_eq!(ovsf_code(8, 3).unwrap(), ovsf_tree(8)[3]);
        for sf in [4, 16, 64, 512] {
            let tree = ovsf_tree(sf);
            for (i, c) in tree.iter().enumerate() {
                assert_eq!(&ovsf_code(sf, i).unwrap(), c);
            }
        }
        assert!(ovsf_code(6, 0).is_err());
        assert!(ovsf_code(4, 4).is_err());
    }

    #[test]
    fn ovsf_orthogonal_at_equal_sf() {
        for sf in [4usize, 8, 32, 256] {
            let codes: Vec<Vec<i8>> = (0..sf).map(|i| ovsf_code(sf, i).unwrap()).collect();
            for i in 0..sf {
                for j in 0..sf {
                    let dot: i64 = codes[i]
                        .iter()
                        .zip(&codes[j])
                        .map(|(a, b)| (*a as i64) * (*b as i64))
                        .sum();
                    assert_eq!(dot, if i == j { sf as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn code_tree_conflicts() {
        assert!(codes_conflict((4, 1), (8, 2)));
        assert!(codes_conflict((4, 1), (8, 3)));
        assert!(!codes_conflict((4, 1), (8, 4)));
        assert!(codes_conflict((16, 5), (16, 5)));
        let cfg = UmtsConfig {
            users: vec![UserSpec::new(4, 1, 0.0), UserSpec::new(16, 6, 0.0)],
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::CodeTreeConflict { .. })
        ));
        UmtsConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_users_rejected() {
        let cfg = UmtsConfig {
            users: vec![],
            ..Default::default()
        };
        assert!(generate_umts(&cfg, &Rng::new(0)).is_err());
    }

    #[test]
    fn scrambling_unit_modulus() {
        let s = gold_scrambling(17, 5000).unwrap();
        assert!(s.iter().all(|z| (z.norm_sqr() - 1.0).abs() < 1e-15));
        assert!(gold_scrambling(MAX_SCRAMBLING_CODE + 1, 10).is_err());
    }

    #[test]
    fn scrambling_repeats_per_frame() {
        let s = gold_scrambling(3, FRAME_CHIPS + 100).unwrap();
        assert_eq!(&s[FRAME_CHIPS..], &s[..100]);
    }

    fn corr(a: &[Complex64], b: &[Complex64], lag: usize) -> f64 {
        let n = a.len() - lag;
        let c: Complex64 = (0..n).map(|k| a[k + lag] * b[k].conj()).sum();
        c.norm() / n as f64
    }

    #[test]
    fn scrambling_autocorrelation_low() {
        let s = gold_scrambling(16, FRAME_CHIPS).unwrap();
        let r0 = corr(&s, &s, 0);
        for lag in 1..=100 {
            assert!(corr(&s, &s, lag) / r0 < 0.05, "lag {lag}");
        }
    }

    #[test]
    fn scrambling_cross_correlation_low() {
        let a = gold_scrambling(0, FRAME_CHIPS).unwrap();
        for id in [1u32, 16, 512, 8191] {
            let b = gold_scrambling(id, FRAME_CHIPS).unwrap();
            assert!(corr(&a, &b, 0) < 0.05, "code {id}");
        }
    }

    /// Matched filter, descramble, and correlate against the user's code.
    fn despread(x: &IqBuffer, cfg: &UmtsConfig, user: usize) -> Vec<Complex64> {
        let sps = cfg.samples_per_chip;
        let rrc = design_rrc_filter(RRC_ROLLOFF, sps, cfg.rrc_span_chips).unwrap();
        let mf = filter_same(&x.samples, &rrc.taps);
        let s = gold_scrambling(cfg.scrambling_code_id, cfg.duration_chips).unwrap();
        let u = &cfg.users[user];
        let code = ovsf_code(u.spreading_factor, u.code_index).unwrap();
        let sf = u.spreading_factor;
        let norm = 1.0 / ((sps as f64).sqrt() * u.amplitude() * sf as f64);
        (0..cfg.duration_chips / sf)
            .map(|m| {
                (0..sf)
                    .map(|c| {
                        let k = m * sf + c;
                        mf[k * sps] * s[k].conj() * code[c] as f64
                    })
                    .sum::<Complex64>()
                    * norm
            })
            .collect()
    }

    #[test]
    fn single_user_despreads_cleanly() {
        let cfg = UmtsConfig {
            users: vec![UserSpec::new(4, 2, 0.0)],
            duration_chips: 2560,
            ..Default::default()
        };
        let rng = Rng::new(8);
        let x = generate_umts(&cfg, &rng).unwrap();
        let tx = user_symbols(&cfg, &rng).unwrap();
        let rx = despread(&x, &cfg, 0);
        // skip symbols inside the filter transient at both ends
        let edge = cfg.rrc_span_chips;
        let e = evm(&rx[edge..rx.len() - edge], &tx[0][edge..rx.len() - edge]).unwrap();
        assert!(e < 0.01, "evm {e}");
    }

    #[test]
    fn orthogonal_users_do_not_leak() {
        let cfg = UmtsConfig {
            users: vec![UserSpec::new(16, 3, 0.0), UserSpec::new(16, 9, 0.0)],
            duration_chips: 4096,
            ..Default::default()
        };
        let rng = Rng::new(21);
        let both = generate_umts(&cfg, &rng).unwrap();
        let tx = user_symbols(&cfg, &rng).unwrap();
        let edge = 4;
        for u in 0..2 {
            let rx = despread(&both, &cfg, u);
            let sl = &rx[edge..rx.len() - edge];
            let want = &tx[u][edge..rx.len() - edge];
            let leak = evm(sl, want).unwrap();
            assert!(20.0 * leak.log10() < -30.0, "user {u} leak {leak}");
        }
    }

    #[test]
    fn power_scales_linearly() {
        let cfg = UmtsConfig::default();
        let mut doubled = cfg.clone();
        for u in &mut doubled.users {
            u.power_db += 10.0 * 2f64.log10();
        }
        let a = generate_umts(&cfg, &Rng::new(5)).unwrap();
        let b = generate_umts(&doubled, &Rng::new(5)).unwrap();
        assert!((b.mean_power() / a.mean_power() - 2.0).abs() < 2e-6);
    }

    /// The 99% band of an ideal 0.22 raised-cosine spectrum at 3.84 Mcps,
    /// integrated numerically, is 4.166 MHz.
    #[test]
    fn default_config_matches_raised_cosine_band() {
        let x = generate_umts(&UmtsConfig::default(), &Rng::new(1)).unwrap();
        assert_eq!(x.len(), 3840 * 4);
        let obw = occupied_bandwidth(&x, 0.99).unwrap();
        assert!((obw / 4.166e6 - 1.0).abs() < 0.02, "{obw}");
    }

    #[test]
    fn deterministic() {
        let cfg = UmtsConfig::default();
        assert_eq!(
            generate_umts(&cfg, &Rng::new(3)).unwrap(),
            generate_umts(&cfg, &Rng::new(3)).unwrap()
        );
    }
}
