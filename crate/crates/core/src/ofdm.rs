//! Shared OFDM engine for LTE and NR: resource grids, Gray QAM, CP-OFDM
//! synthesis and a matching demodulator.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::waveform::Payload;
use crate::{Complex64, Error, IqBuffer, Result, Rng, Standard};

pub const SUBCARRIERS_PER_RB: usize = 12;
/// FFT size all CP lengths are quoted against.
const REF_FFT: usize = 2048;
const NORMAL_CP_REF: usize = 144;
const LONG_CP_EXTRA_REF: usize = 16;
const MIN_FFT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OfdmStandard {
    #[default]
    Lte,
    Nr,
}

impl From<OfdmStandard> for Standard {
    fn from(s: OfdmStandard) -> Standard {
        match s {
            OfdmStandard::Lte => Standard::Lte,
            OfdmStandard::Nr => Standard::Nr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
    #[default]
    Qam64,
    Qam256,
}

impl Modulation {
    pub const ALL: [Modulation; 4] = [
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam64,
        Modulation::Qam256,
    ];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CpMode {
    #[default]
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmConfig {
    /// Set from the enclosing waveform tag rather than serialized.
    #[serde(skip)]
    pub standard: OfdmStandard,
    pub bandwidth_hz: f64,
    /// Ignored for LTE, which always runs at 15 kHz.
    pub numerology_mu: u8,
    pub modulation: Modulation,
    pub n_slots: usize,
    pub cp_mode: CpMode,
    /// Overrides the bandwidth table when set.
    pub n_rb: Option<usize>,
    pub payload: Payload,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        OfdmConfig::lte_default()
    }
}

const LTE_RB: [(f64, usize); 6] = [
    (1.4e6, 6),
    (3e6, 15),
    (5e6, 25),
    (10e6, 50),
    (15e6, 75),
    (20e6, 100),
];

// Maximum transmission bandwidth configuration per numerology, in MHz.
const NR_RB_MU0: [(f64, usize); 8] = [
    (5.0, 25),
    (10.0, 52),
    (15.0, 79),
    (20.0, 106),
    (25.0, 133),
    (30.0, 160),
    (40.0, 216),
    (50.0, 270),
];
const NR_RB_MU1: [(f64, usize); 13] = [
    (5.0, 11),
    (10.0, 24),
    (15.0, 38),
    (20.0, 51),
    (25.0, 65),
    (30.0, 78),
    (40.0, 106),
    (50.0, 133),
    (60.0, 162),
    (70.0, 189),
    (80.0, 217),
    (90.0, 245),
    (100.0, 273),
];
const NR_RB_MU2: [(f64, usize); 12] = [
    (10.0, 11),
    (15.0, 18),
    (20.0, 24),
    (25.0, 31),
    (30.0, 38),
    (40.0, 51),
    (50.0, 65),
    (60.0, 79),
    (70.0, 93),
    (80.0, 107),
    (90.0, 121),
    (100.0, 135),
];
const NR_RB_MU3: [(f64, usize); 4] = [(50.0, 32), (100.0, 66), (200.0, 132), (400.0, 264)];
const NR_RB_MU4: [(f64, usize); 1] = [(400.0, 132)];

fn lookup(table: &[(f64, usize)], bw_hz: f64, scale: f64) -> Option<usize> {
    table
        .iter()
        .find(|(b, _)| ((b * scale) - bw_hz).abs() < 1.0)
        .map(|&(_, n)| n)
}

pub fn scs_for_numerology(mu: u8) -> Result<f64> {
    if mu > 4 {
        return Err(Error::invalid(format!("numerology {mu} outside 0..=4")));
    }
    Ok(15e3 * f64::from(1u32 << mu))
}

impl OfdmConfig {
    /// 20 MHz, 64-QAM, one subframe.
    pub fn lte_default() -> Self {
        OfdmConfig {
            standard: OfdmStandard::Lte,
            bandwidth_hz: 20e6,
            numerology_mu: 0,
            modulation: Modulation::Qam64,
            n_slots: 2,
            cp_mode: CpMode::Normal,
            n_rb: None,
            payload: Payload::Random,
        }
    }

    /// 100 MHz at 30 kHz spacing, 64-QAM, 1 ms.
    pub fn nr_default() -> Self {
        OfdmConfig {
            standard: OfdmStandard::Nr,
            bandwidth_hz: 100e6,
            numerology_mu: 1,
            modulation: Modulation::Qam64,
            n_slots: 2,
            cp_mode: CpMode::Normal,
            n_rb: None,
            payload: Payload::Random,
        }
    }

    pub fn with_standard(mut self, standard: OfdmStandard) -> Self {
        self.standard = standard;
        self
    }

    pub fn mu(&self) -> u8 {
        match self.standard {
            OfdmStandard::Lte => 0,
            OfdmStandard::Nr => self.numerology_mu,
        }
    }

    pub fn scs_hz(&self) -> Result<f64> {
        scs_for_numerology(self.mu())
    }

    pub fn resource_blocks(&self) -> Result<usize> {
        if let Some(n) = self.n_rb {
            if n == 0 {
                return Err(Error::invalid("n_rb must be positive"));
            }
            return Ok(n);
        }
        let found = match self.standard {
            OfdmStandard::Lte => lookup(&LTE_RB, self.bandwidth_hz, 1.0),
            OfdmStandard::Nr => {
                let table: &[(f64, usize)] = match self.numerology_mu {
                    0 => &NR_RB_MU0,
                    1 => &NR_RB_MU1,
                    2 => &NR_RB_MU2,
                    3 => &NR_RB_MU3,
                    4 => &NR_RB_MU4,
                    mu => return Err(Error::invalid(format!("numerology {mu} outside 0..=4"))),
                };
                lookup(table, self.bandwidth_hz, 1e6)
            }
        };
        found.ok_or_else(|| {
            Error::invalid(format!(
                "{} MHz is not a supported {:?} bandwidth at numerology {}",
                self.bandwidth_hz / 1e6,
                self.standard,
                self.mu()
            ))
        })
    }

    pub fn n_subcarriers(&self) -> Result<usize> {
        Ok(self.resource_blocks()? * SUBCARRIERS_PER_RB)
    }

    /// Smallest power of two leaving at least a third of guard band.
    pub fn fft_size(&self) -> Result<usize> {
        let n_sc = self.n_subcarriers()?;
        Ok((n_sc * 4).div_ceil(3).next_power_of_two().max(MIN_FFT))
    }

    pub fn sample_rate_hz(&self) -> Result<f64> {
        Ok(self.fft_size()? as f64 * self.scs_hz()?)
    }

    pub fn symbols_per_slot(&self) -> usize {
        match self.standard {
            OfdmStandard::Lte => 7,
            OfdmStandard::Nr => 14,
        }
    }

    /// Nominal slot length; with µ ≥ 2 the first slot of each half-subframe
    /// is a few samples longer.
    pub fn slot_duration_s(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self.standard {
            OfdmStandard::Lte => 0.5e-3,
            OfdmStandard::Nr => 1e-3 / f64::from(1u32 << self.mu()),
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_slots * self.symbols_per_slot()
    }

    /// Symbols per half-subframe; the first of each gets the long prefix.
    fn symbols_per_half_subframe(&self) -> usize {
        7 << self.mu()
    }

    /// Cyclic prefix length of OFDM symbol `l` counted from the start of
    /// the signal.
    pub fn cp_len(&self, l: usize) -> Result<usize> {
        let n = self.fft_size()?;
        let normal = NORMAL_CP_REF * n / REF_FFT;
        if l % self.symbols_per_half_subframe() == 0 {
            Ok(normal + (LONG_CP_EXTRA_REF << self.mu()) * n / REF_FFT)
        } else {
            Ok(normal)
        }
    }

    pub fn total_samples(&self) -> Result<usize> {
        let n = self.fft_size()?;
        (0..self.n_symbols()).try_fold(0, |acc, l| Ok(acc + n + self.cp_len(l)?))
    }

    pub fn duration_s(&self) -> Result<f64> {
        Ok(self.total_samples()? as f64 / self.sample_rate_hz()?)
    }

    pub fn validate(&self) -> Result<()> {
        scs_for_numerology(self.numerology_mu)?;
        if self.n_slots == 0 {
            return Err(Error::invalid("n_slots must be positive"));
        }
        let n_sc = self.n_subcarriers()?;
        if n_sc < SUBCARRIERS_PER_RB {
            return Err(Error::invalid("grid needs at least one resource block"));
        }
        Ok(())
    }

    /// FFT bin (signed, before wrapping) for grid column `k`.
    fn bin_offset(&self, k: usize, n_sc: usize) -> isize {
        let half = (n_sc / 2) as isize;
        let k = k as isize;
        match self.standard {
            OfdmStandard::Lte if k >= half => k - half + 1,
            _ => k - half,
        }
    }

    /// Baseband frequency of grid column `k`.
    pub fn subcarrier_freq_hz(&self, k: usize) -> Result<f64> {
        Ok(self.bin_offset(k, self.n_subcarriers()?) as f64 * self.scs_hz()?)
    }
}

/// Symbols on a time-frequency lattice, stored symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub cells: Vec<Complex64>,
    pub n_symbols: usize,
    pub n_subcarriers: usize,
    pub scs_hz: f64,
}

impl ResourceGrid {
    pub fn zeros(n_symbols: usize, n_subcarriers: usize, scs_hz: f64) -> Self {
        ResourceGrid {
            cells: vec![Complex64::new(0.0, 0.0); n_symbols * n_subcarriers],
            n_symbols,
            n_subcarriers,
            scs_hz,
        }
    }

    pub fn for_config(cfg: &OfdmConfig) -> Result<Self> {
        Ok(Self::zeros(cfg.n_symbols(), cfg.n_subcarriers()?, cfg.scs_hz()?))
    }

    pub fn symbol(&self, l: usize) -> &[Complex64] {
        &self.cells[l * self.n_subcarriers..(l + 1) * self.n_subcarriers]
    }

    pub fn symbol_mut(&mut self, l: usize) -> &mut [Complex64] {
        &mut self.cells[l * self.n_subcarriers..(l + 1) * self.n_subcarriers]
    }

    pub fn get(&self, l: usize, k: usize) -> Complex64 {
        self.cells[l * self.n_subcarriers + k]
    }

    pub fn set(&mut self, l: usize, k: usize, v: Complex64) {
        self.cells[l * self.n_subcarriers + k] = v;
    }

    pub fn mean_power(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.cells.len() as f64
    }
}

/// Gray-coded square QAM with unit average power. Even-indexed bits of each
/// group drive the in-phase axis, odd-indexed bits the quadrature axis.
pub fn map_qam(bits: &[u8], order: Modulation) -> Result<Vec<Complex64>> {
    let m = order.bits_per_symbol();
    if bits.len() % m != 0 {
        return Err(Error::invalid(format!(
            "{} bits is not a multiple of {m}",
            bits.len()
        )));
    }
    let norm = (2.0 * (order.order() as f64 - 1.0) / 3.0).sqrt();
    Ok(bits
        .chunks_exact(m)
        .map(|g| {
            let i: Vec<u8> = g.iter().step_by(2).copied().collect();
            let q: Vec<u8> = g.iter().skip(1).step_by(2).copied().collect();
            Complex64::new(axis_level(&i), axis_level(&q)) / norm
        })
        .collect())
}

/// Reflected-binary amplitude: the first bit picks the sign, each later bit
/// folds the level around the midpoint of the remaining range.
fn axis_level(bits: &[u8]) -> f64 {
    let q = bits.len();
    let mut level = 1.0;
    for (j, &b) in bits.iter().enumerate().skip(1).rev() {
        level = f64::from(1u32 << (q - j)) - (1.0 - 2.0 * f64::from(b)) * level;
    }
    (1.0 - 2.0 * f64::from(bits[0])) * level
}

/// Ratio of time-domain body energy to grid symbol energy.
pub fn parseval_constant(cfg: &OfdmConfig) -> Result<f64> {
    Ok(cfg.fft_size()? as f64 / cfg.n_subcarriers()? as f64)
}

pub fn ofdm_modulate(grid: &ResourceGrid, cfg: &OfdmConfig) -> Result<IqBuffer> {
    cfg.validate()?;
    let n_sc = cfg.n_subcarriers()?;
    if grid.n_subcarriers != n_sc {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} subcarriers, config expects {n_sc}",
            grid.n_subcarriers
        )));
    }
    if grid.cells.len() != grid.n_symbols * n_sc {
        return Err(Error::DimensionMismatch("grid cell count".into()));
    }
    let n = cfg.fft_size()?;
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let scale = 1.0 / (n_sc as f64).sqrt();
    let bins: Vec<usize> = (0..n_sc)
        .map(|k| cfg.bin_offset(k, n_sc).rem_euclid(n as isize) as usize)
        .collect();
    let mut out = Vec::new();
    let mut body = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..grid.n_symbols {
        body.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (&bin, &x) in bins.iter().zip(grid.symbol(l)) {
            body[bin] = x * scale;
        }
        ifft.process(&mut body);
        let cp = cfg.cp_len(l)?;
        out.extend_from_slice(&body[n - cp..]);
        out.extend_from_slice(&body);
    }
    IqBuffer::new(out, cfg.sample_rate_hz()?)
}

pub fn ofdm_demodulate(buf: &IqBuffer, cfg: &OfdmConfig) -> Result<ResourceGrid> {
    cfg.validate()?;
    let n = cfg.fft_size()?;
    let n_sc = cfg.n_subcarriers()?;
    // count whole symbols; the buffer must end on a symbol boundary
    let mut starts = Vec::new();
    let mut pos = 0;
    while pos < buf.len() {
        let cp = cfg.cp_len(starts.len())?;
        pos += cp;
        starts.push(pos);
        pos += n;
    }
    if pos != buf.len() {
        return Err(Error::LengthMismatch {
            expected: pos,
            actual: buf.len(),
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = (n_sc as f64).sqrt() / n as f64;
    let mut grid = ResourceGrid::zeros(starts.len(), n_sc, cfg.scs_hz()?);
    let mut body = vec![Complex64::new(0.0, 0.0); n];
    for (l, &s) in starts.iter().enumerate() {
        body.copy_from_slice(&buf.samples[s..s + n]);
        fft.process(&mut body);
        for (k, cell) in grid.symbol_mut(l).iter_mut().enumerate() {
            let bin = cfg.bin_offset(k, n_sc).rem_euclid(n as isize) as usize;
            *cell = body[bin] * scale;
        }
    }
    Ok(grid)
}

/// Random-payload grid filling every cell of the config.
pub fn random_grid(cfg: &OfdmConfig, rng: &Rng) -> Result<ResourceGrid> {
    let mut grid = ResourceGrid::for_config(cfg)?;
    let m = cfg.modulation.bits_per_symbol();
    let mut r = rng.fork(1);
    let bits = cfg.payload.take(grid.cells.len() * m, &mut r)?;
    grid.cells = map_qam(&bits, cfg.modulation)?;
    Ok(grid)
}

fn generate(cfg: &OfdmConfig, want: OfdmStandard, rng: &Rng) -> Result<IqBuffer> {
    if cfg.standard != want {
        return Err(Error::invalid(format!(
            "config is for {:?}, not {:?}",
            cfg.standard, want
        )));
    }
    let grid = random_grid(cfg, rng)?;
    Ok(ofdm_modulate(&grid, cfg)?.with_label(want.into(), rng.seed()))
}

pub fn generate_lte(cfg: &OfdmConfig, rng: &Rng) -> Result<IqBuffer> {
    generate(cfg, OfdmStandard::Lte, rng)
}

pub fn generate_nr(cfg: &OfdmConfig, rng: &Rng) -> Result<IqBuffer> {
    generate(cfg, OfdmStandard::Nr, rng)
}
