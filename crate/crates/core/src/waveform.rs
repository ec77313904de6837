//! Symbol mapping on the time-frequency lattice and transmit synthesis.
//!
//! Slots are indexed by `l` in `[-G, G]`; column `c = l + G` of a
//! [`SymbolGrid`] holds slot `l`. Block `l` starts at sample `c * N_s` of the
//! frame, so every block sees its own local time origin and the modulation
//! phase offset between blocks is carried by the rotated symbols `d_rot`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::config::{FrameConfig, Scheme};
use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::pulse::PrototypePulse;
use crate::rng::{complex_gaussian, random_bits, rng_for, stream};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `j^n` for any integer `n`.
pub fn j_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Lattice phase `e^{j 2 pi delta_f delta_t k l}`.
pub fn lattice_phase(density: f64, k: usize, l: i64) -> Complex64 {
    let x = density * k as f64 * l as f64;
    Complex64::from_polar(1.0, 2.0 * PI * (x - x.round()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    subcarriers: usize,
    half_len: usize,
    /// Data symbols, row-major `[k][c]`.
    pub a: Vec<Complex64>,
    /// Transmitted symbols.
    pub d: Vec<Complex64>,
    /// Phase-rotated transmitted symbols.
    pub d_rot: Vec<Complex64>,
    /// Constellation index of each data symbol.
    pub labels: Vec<usize>,
}

impl SymbolGrid {
    /// Build the grid from data symbols; `d` and `d_rot` follow the scheme.
    pub fn from_data(cfg: &FrameConfig, a: Vec<Complex64>) -> Result<Self> {
        let n = cfg.subcarriers;
        let slots = cfg.slots();
        if a.len() != n * slots {
            return Err(Error::Dimension(format!("grid has {} symbols, expected {}x{}", a.len(), n, slots)));
        }
        let mut g = Self {
            subcarriers: n,
            half_len: cfg.half_len,
            d: vec![ZERO; a.len()],
            d_rot: vec![ZERO; a.len()],
            labels: vec![0; a.len()],
            a,
        };
        for k in 0..n {
            for c in 0..slots {
                let l = c as i64 - cfg.half_len as i64;
                let i = k * slots + c;
                g.d[i] = if cfg.scheme.is_oqam() { j_pow(k as i64 + l) * g.a[i] } else { g.a[i] };
            }
        }
        g.rotate(cfg.density());
        Ok(g)
    }

    fn rotate(&mut self, density: f64) {
        let slots = self.slots();
        for k in 0..self.subcarriers {
            for c in 0..slots {
                let l = c as i64 - self.half_len as i64;
                let i = k * slots + c;
                self.d_rot[i] = self.d[i] * lattice_phase(density, k, l);
            }
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn half_len(&self) -> usize {
        self.half_len
    }

    pub fn slots(&self) -> usize {
        2 * self.half_len + 1
    }

    pub fn index(&self, k: usize, l: i64) -> usize {
        k * self.slots() + (l + self.half_len as i64) as usize
    }

    /// Rotated column for slot `l`.
    pub fn column(&self, l: i64) -> Vec<Complex64> {
        (0..self.subcarriers).map(|k| self.d_rot[self.index(k, l)]).collect()
    }

    /// Zero grid of the frame's shape.
    pub fn zeros(cfg: &FrameConfig) -> Self {
        Self::from_data(cfg, vec![ZERO; cfg.subcarriers * cfg.slots()]).expect("shape matches")
    }
}

/// Map an MSB-first bit stream onto the lattice.
///
/// Data fill the grid column by column, subcarriers first. For SCM the
/// first `G_cp` slots are a cyclic prefix repeating the last `G_cp` slots, so
/// only `N (2G+1-G_cp) log2|X|` bits are consumed.
pub fn map_symbols(bits: &[u8], cfg: &FrameConfig) -> Result<SymbolGrid> {
    let cons = cfg.constellation()?;
    let expected = cfg.bits_per_frame()?;
    if bits.len() != expected {
        return Err(Error::BitCount { expected, actual: bits.len() });
    }
    let idx = cons.indices_from_bits(bits)?;
    let n = cfg.subcarriers;
    let slots = cfg.slots();
    let prefix = slots - cfg.data_slots();
    let mut labels = vec![0usize; n * slots];
    for (j, &label) in idx.iter().enumerate() {
        let c = prefix + j / n;
        labels[(j % n) * slots + c] = label;
    }
    for c in 0..prefix {
        for k in 0..n {
            labels[k * slots + c] = labels[k * slots + slots - prefix + c];
        }
    }
    let a = labels.iter().map(|&i| cons.points()[i]).collect();
    let mut grid = SymbolGrid::from_data(cfg, a)?;
    grid.labels = labels;
    Ok(grid)
}

/// Uniform random data for one frame.
pub fn random_grid(cfg: &FrameConfig, seed: u64) -> Result<SymbolGrid> {
    let mut rng = rng_for(seed, &[stream::BITS]);
    let bits = random_bits(&mut rng, cfg.bits_per_frame()?);
    map_symbols(&bits, cfg)
}

fn check_block(column: &[Complex64], pulse: &PrototypePulse, cfg: &FrameConfig) -> Result<()> {
    if column.len() != cfg.subcarriers {
        return Err(Error::Dimension(format!("column has {} entries, N={}", column.len(), cfg.subcarriers)));
    }
    let e = pulse.energy();
    if (e - 1.0).abs() > 1e-9 {
        return Err(Error::PulseEnergy(e));
    }
    Ok(())
}

/// Filter-bank form: each subcarrier modulates the pulse directly,
/// `s[n] = p[n] N^{-1/2} sum_k d_k e^{j 2 pi k (delta_f delta_t / N_s) n}`.
pub fn synthesize_block_filterbank(column: &[Complex64], pulse: &PrototypePulse, cfg: &FrameConfig) -> Result<Vec<Complex64>> {
    check_block(column, pulse, cfg)?;
    let f0 = cfg.frequency_step();
    let norm = (cfg.subcarriers as f64).sqrt().recip();
    Ok(pulse
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &p)| {
            let mut acc = ZERO;
            for (k, &d) in column.iter().enumerate() {
                let ph = (k as f64 * f0 * n as f64).fract();
                acc += d * Complex64::from_polar(1.0, 2.0 * PI * ph);
            }
            acc * p * norm
        })
        .collect())
}

/// Windowed-IDFT form: place the column on bins `k M` of a `Q`-point IDFT,
/// extend periodically over the pulse support and window by the pulse.
#[derive(Debug, Clone)]
pub struct BlockSynthesizer {
    dft: Dft,
    grid_divisor: usize,
    subcarriers: usize,
}

impl BlockSynthesizer {
    pub fn new(cfg: &FrameConfig) -> Self {
        Self { dft: Dft::new(cfg.dft_len), grid_divisor: cfg.grid_divisor, subcarriers: cfg.subcarriers }
    }

    pub fn synthesize(&self, column: &[Complex64], pulse: &PrototypePulse) -> Vec<Complex64> {
        let q = self.dft.len();
        let mut buf = vec![ZERO; q];
        for (k, &d) in column.iter().enumerate() {
            buf[k * self.grid_divisor] = d;
        }
        self.dft.inverse(&mut buf);
        // unitary IDFT carries 1/sqrt(Q); the block needs 1/sqrt(N)
        let scale = (q as f64 / self.subcarriers as f64).sqrt();
        pulse.samples().iter().enumerate().map(|(n, &p)| buf[n % q] * p * scale).collect()
    }
}

pub fn synthesize_block(column: &[Complex64], pulse: &PrototypePulse, cfg: &FrameConfig) -> Result<Vec<Complex64>> {
    check_block(column, pulse, cfg)?;
    Ok(BlockSynthesizer::new(cfg).synthesize(column, pulse))
}

/// Amplitude turning unit-energy blocks into a stream of per-sample power P.
pub fn frame_amplitude(cfg: &FrameConfig) -> f64 {
    (cfg.power * cfg.samples_per_symbol as f64).sqrt()
}

/// Overlap-add of all blocks, block `c` shifted by `c N_s` samples.
pub fn synthesize_frame(grid: &SymbolGrid, pulse: &PrototypePulse, cfg: &FrameConfig) -> Result<Vec<Complex64>> {
    if grid.subcarriers() != cfg.subcarriers || grid.half_len() != cfg.half_len {
        return Err(Error::Dimension("grid shape does not match the frame".into()));
    }
    let len = cfg.frame_samples(pulse.len());
    if len > cfg.max_frame_samples {
        return Err(Error::FrameTooLong { requested: len, max: cfg.max_frame_samples });
    }
    check_block(&grid.column(0), pulse, cfg)?;
    let synth = BlockSynthesizer::new(cfg);
    let amp = frame_amplitude(cfg);
    let mut x = vec![ZERO; len];
    for c in 0..grid.slots() {
        let col = grid.column(c as i64 - grid.half_len() as i64);
        if col.iter().all(|v| *v == ZERO) {
            continue;
        }
        let s = synth.synthesize(&col, pulse);
        let start = c * cfg.samples_per_symbol;
        for (xi, si) in x[start..start + s.len()].iter_mut().zip(&s) {
            *xi += si * amp;
        }
    }
    Ok(x)
}

fn perturb<R: Rng + ?Sized>(v: &mut [Complex64], evm: f64, rng: &mut R) {
    let rms2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len().max(1) as f64;
    let var = evm * evm * rms2;
    for z in v.iter_mut() {
        *z += complex_gaussian(rng, var);
    }
}

/// Perturb each transmitted symbol by circular Gaussian noise of RMS
/// `evm * symbol RMS`.
pub fn apply_evm(grid: &SymbolGrid, cfg: &FrameConfig, evm: f64, seed: u64) -> Result<SymbolGrid> {
    if evm < 0.0 {
        return Err(Error::NegativeEvm(evm));
    }
    let mut out = grid.clone();
    if evm == 0.0 {
        return Ok(out);
    }
    let mut rng = rng_for(seed, &[stream::EVM]);
    perturb(&mut out.d, evm, &mut rng);
    out.rotate(cfg.density());
    Ok(out)
}

/// Sample-level variant for streams that are already synthesized.
pub fn apply_evm_samples(x: &[Complex64], evm: f64, seed: u64) -> Result<Vec<Complex64>> {
    if evm < 0.0 {
        return Err(Error::NegativeEvm(evm));
    }
    let mut out = x.to_vec();
    if evm > 0.0 {
        let mut rng = rng_for(seed, &[stream::EVM]);
        perturb(&mut out, evm, &mut rng);
    }
    Ok(out)
}

/// True when `scheme` carries real PAM symbols.
pub fn real_symbols(scheme: Scheme) -> bool {
    scheme.is_oqam()
}
