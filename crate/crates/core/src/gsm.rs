//! GSM burst construction and GMSK modulation.
//!
//! The chain is: rate-1/2 K=5 convolutional code, block interleaving, burst
//! assembly (normal, frequency correction, synchronization, access), then
//! differentially encoded GMSK with BT = 0.3 at 13 MHz / 48 symbols/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::filter::design_gaussian_filter;
use crate::waveform::Payload;
use crate::{Complex64, Error, IqBuffer, Result, Rng, Standard};

pub const SYMBOL_RATE_HZ: f64 = 13e6 / 48.0;
/// One timeslot, 156.25 symbol periods.
pub const TIMESLOT_S: f64 = 156.25 / SYMBOL_RATE_HZ;
pub const GMSK_BT: f64 = 0.3;
pub const GAUSSIAN_SPAN_SYMBOLS: usize = 4;

/// Generator taps: G0 = 1 + D^3 + D^4, G1 = 1 + D + D^3 + D^4.
const G0: [u8; 5] = [1, 0, 0, 1, 1];
const G1: [u8; 5] = [1, 1, 0, 1, 1];
const CONSTRAINT_LENGTH: usize = 5;

pub const NB_DATA_BITS: usize = 114;
pub const SB_DATA_BITS: usize = 78;
pub const AB_DATA_BITS: usize = 36;
/// Information bits per coded block. Normal bursts carry one 456-bit coded
/// block across four bursts; SB and AB carry one block each.
pub const NB_INFO_BITS: usize = 224;
pub const SB_INFO_BITS: usize = 35;
pub const AB_INFO_BITS: usize = 14;
pub const INTERLEAVE_ROWS: usize = 8;
pub const INTERLEAVE_COLS: usize = 57;

pub const TRAINING_SEQUENCES: [[u8; 26]; 8] = [
    [0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 1, 1, 1],
    [0, 0, 1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1],
    [0, 1, 0, 0, 0, 0, 1, 1, 1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1, 0],
    [0, 1, 0, 0, 0, 1, 1, 1, 1, 0, 1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1, 0],
    [0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1],
    [0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0],
    [1, 0, 1, 0, 0, 1, 1, 1, 1, 1, 0, 1, 1, 0, 0, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 1],
    [1, 1, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 1, 1, 0, 0],
];

pub const SB_EXTENDED_TRAINING: [u8; 64] = [
    1, 0, 1, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1,
    1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1, 1, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0,
    1, 1,
];

pub const AB_SYNC_SEQUENCE: [u8; 41] = [
    0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1,
    0, 0, 0, 1, 1, 1, 1, 0, 0, 0,
];

pub const AB_EXTENDED_TAIL: [u8; 8] = [0, 0, 1, 1, 1, 0, 1, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BurstType {
    #[default]
    NormalBurst,
    FrequencyCorrectionBurst,
    SynchronizationBurst,
    AccessBurst,
}

impl BurstType {
    /// Useful bits in the burst, excluding guard.
    pub fn length(self) -> usize {
        match self {
            BurstType::AccessBurst => 88,
            _ => 148,
        }
    }

    pub fn data_bits(self) -> usize {
        match self {
            BurstType::NormalBurst => NB_DATA_BITS,
            BurstType::FrequencyCorrectionBurst => 0,
            BurstType::SynchronizationBurst => SB_DATA_BITS,
            BurstType::AccessBurst => AB_DATA_BITS,
        }
    }

    /// Guard bits after the burst in timeslot `slot`; every fourth slot is
    /// one symbol longer so the average timeslot is 156.25 symbols.
    pub fn guard_bits(self, slot: usize) -> usize {
        let extra = usize::from(slot % 4 == 0);
        match self {
            BurstType::AccessBurst => 68 + extra,
            _ => 8 + extra,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsmConfig {
    pub burst_type: BurstType,
    pub tsc_index: u8,
    pub payload: Payload,
    pub samples_per_symbol: usize,
    pub apply_channel_coding: bool,
    /// Consecutive timeslots to generate.
    pub n_bursts: usize,
}

impl Default for GsmConfig {
    fn default() -> Self {
        GsmConfig {
            burst_type: BurstType::NormalBurst,
            tsc_index: 0,
            payload: Payload::Random,
            samples_per_symbol: 4,
            apply_channel_coding: true,
            n_bursts: 8,
        }
    }
}

impl GsmConfig {
    pub fn sample_rate_hz(&self) -> f64 {
        SYMBOL_RATE_HZ * self.samples_per_symbol as f64
    }

    pub fn n_symbols(&self) -> usize {
        (0..self.n_bursts)
            .map(|s| self.burst_type.length() + self.burst_type.guard_bits(s))
            .sum()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_symbols() as f64 / SYMBOL_RATE_HZ
    }

    fn validate(&self) -> Result<()> {
        if self.tsc_index > 7 {
            return Err(Error::invalid(format!(
                "tsc_index must be 0..=7, got {}",
                self.tsc_index
            )));
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::invalid("samples_per_symbol must be >= 2"));
        }
        if self.n_bursts == 0 {
            return Err(Error::invalid("n_bursts must be >= 1"));
        }
        Ok(())
    }
}

/// Rate-1/2, K=5 convolutional code with four zero flush bits.
///
/// Output interleaves the two generator outputs per input bit.
pub fn convolutional_encode(bits: &[u8]) -> Result<Vec<u8>> {
    if bits.is_empty() {
        return Err(Error::invalid("cannot encode an empty bit sequence"));
    }
    let mut state = [0u8; CONSTRAINT_LENGTH];
    let flushed = bits
        .iter()
        .copied()
        .chain(std::iter::repeat_n(0, CONSTRAINT_LENGTH - 1));
    let mut out = Vec::with_capacity(2 * (bits.len() + CONSTRAINT_LENGTH - 1));
    for b in flushed {
        state.rotate_right(1);
        state[0] = b & 1;
        let c0 = G0.iter().zip(&state).fold(0, |acc, (g, s)| acc ^ (g & s));
        let c1 = G1.iter().zip(&state).fold(0, |acc, (g, s)| acc ^ (g & s));
        out.push(c0);
        out.push(c1);
    }
    Ok(out)
}

/// Writes row-wise into a `rows x cols` matrix and reads column-wise.
pub fn block_interleave<T: Copy>(bits: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    if bits.len() != rows * cols {
        return Err(Error::LengthMismatch {
            expected: rows * cols,
            actual: bits.len(),
        });
    }
    let mut out = Vec::with_capacity(bits.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(bits[r * cols + c]);
        }
    }
    Ok(out)
}

pub fn block_deinterleave<T: Copy>(bits: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    // reading column-wise of rows x cols is writing row-wise of cols x rows
    block_interleave(bits, cols, rows)
}

/// Assembles one burst from its data bits.
pub fn assemble_burst(burst_type: BurstType, tsc_index: u8, data: &[u8]) -> Result<Vec<u8>> {
    if tsc_index > 7 {
        return Err(Error::invalid(format!(
            "tsc_index must be 0..=7, got {tsc_index}"
        )));
    }
    if data.len() != burst_type.data_bits() {
        return Err(Error::LengthMismatch {
            expected: burst_type.data_bits(),
            actual: data.len(),
        });
    }
    let tail = [0u8; 3];
    let mut b = Vec::with_capacity(burst_type.length());
    match burst_type {
        BurstType::NormalBurst => {
            // stealing flags cleared: traffic, not FACCH
            b.extend_from_slice(&tail);
            b.extend_from_slice(&data[..57]);
            b.push(0);
            b.extend_from_slice(&TRAINING_SEQUENCES[tsc_index as usize]);
            b.push(0);
            b.extend_from_slice(&data[57..]);
            b.extend_from_slice(&tail);
        }
        BurstType::FrequencyCorrectionBurst => {
            b.resize(148, 0);
        }
        BurstType::SynchronizationBurst => {
            b.extend_from_slice(&tail);
            b.extend_from_slice(&data[..39]);
            b.extend_from_slice(&SB_EXTENDED_TRAINING);
            b.extend_from_slice(&data[39..]);
            b.extend_from_slice(&tail);
        }
        BurstType::AccessBurst => {
            b.extend_from_slice(&AB_EXTENDED_TAIL);
            b.extend_from_slice(&AB_SYNC_SEQUENCE);
            b.extend_from_slice(data);
            b.extend_from_slice(&tail);
        }
    }
    debug_assert_eq!(b.len(), burst_type.length());
    Ok(b)
}

/// Data bits for each of `cfg.n_bursts` bursts.
fn burst_payloads(cfg: &GsmConfig, rng: &mut Rng) -> Result<Vec<Vec<u8>>> {
    let bt = cfg.burst_type;
    let n = cfg.n_bursts;
    if bt == BurstType::FrequencyCorrectionBurst {
        return Ok(vec![Vec::new(); n]);
    }
    if !cfg.apply_channel_coding {
        let all = cfg.payload.take(n * bt.data_bits(), rng)?;
        return Ok(all.chunks(bt.data_bits()).map(<[u8]>::to_vec).collect());
    }
    match bt {
        BurstType::NormalBurst => {
            let n_blocks = n.div_ceil(4);
            let info = cfg.payload.take(n_blocks * NB_INFO_BITS, rng)?;
            let mut out = Vec::with_capacity(n_blocks * 4);
            for block in info.chunks(NB_INFO_BITS) {
                let coded = convolutional_encode(block)?;
                let inter = block_interleave(&coded, INTERLEAVE_ROWS, INTERLEAVE_COLS)?;
                out.extend(inter.chunks(NB_DATA_BITS).map(<[u8]>::to_vec));
            }
            out.truncate(n);
            Ok(out)
        }
        BurstType::SynchronizationBurst | BurstType::AccessBurst => {
            let k = if bt == BurstType::SynchronizationBurst {
                SB_INFO_BITS
            } else {
                AB_INFO_BITS
            };
            let info = cfg.payload.take(n * k, rng)?;
            info.chunks(k).map(convolutional_encode).collect()
        }
        BurstType::FrequencyCorrectionBurst => unreachable!(),
    }
}

/// One burst per the config's type, TSC and payload source.
pub fn build_burst(cfg: &GsmConfig, rng: &Rng) -> Result<Vec<u8>> {
    cfg.validate()?;
    let single = GsmConfig {
        n_bursts: 1,
        ..cfg.clone()
    };
    let mut r = rng.fork(1);
    let data = burst_payloads(&single, &mut r)?;
    assemble_burst(cfg.burst_type, cfg.tsc_index, &data[0])
}

/// Differentially encoded, Gaussian-filtered MSK at `sps` samples per symbol.
///
/// `d_k = b_k xor b_{k-1}` with `b_{-1} = 1`, mapped to `a_k = 1 - 2 d_k`.
/// Each symbol advances the phase by `a_k * pi/2` once the filter settles.
pub fn gmsk_modulate(bits: &[u8], samples_per_symbol: usize) -> Result<IqBuffer> {
    let g = design_gaussian_filter(GMSK_BT, samples_per_symbol, GAUSSIAN_SPAN_SYMBOLS)?;
    let sps = samples_per_symbol;
    let mut prev = 1u8;
    let mut nrz = Vec::with_capacity(bits.len() * sps);
    for &b in bits {
        let d = (b & 1) ^ prev;
        prev = b & 1;
        let a = 1.0 - 2.0 * d as f64;
        nrz.extend(std::iter::repeat_n(a, sps));
    }
    let c = g.center();
    let n = nrz.len();
    let step = PI / (2.0 * sps as f64);
    let mut phase = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let k_lo = (i + c + 1).saturating_sub(n);
        let k_hi = (i + c).min(g.taps.len() - 1);
        let f: f64 = (k_lo..=k_hi).map(|k| g.taps[k] * nrz[i + c - k]).sum();
        phase += step * f;
        out.push(Complex64::from_polar(1.0, phase));
    }
    IqBuffer::new(out, SYMBOL_RATE_HZ * sps as f64)
}

/// Full chain: coding, interleaving, bursts with guard periods, GMSK.
pub fn generate_gsm(cfg: &GsmConfig, rng: &Rng) -> Result<IqBuffer> {
    cfg.validate()?;
    let mut payload_rng = rng.fork(1);
    let payloads = burst_payloads(cfg, &mut payload_rng)?;
    let mut bits = Vec::with_capacity(cfg.n_symbols());
    for (slot, data) in payloads.iter().enumerate() {
        bits.extend(assemble_burst(cfg.burst_type, cfg.tsc_index, data)?);
        // guard period keeps the carrier on with constant modulating bits
        bits.extend(std::iter::repeat_n(1u8, cfg.burst_type.guard_bits(slot)));
    }
    Ok(gmsk_modulate(&bits, cfg.samples_per_symbol)?.with_label(Standard::Gsm, rng.seed()))
}
