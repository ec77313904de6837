//! Frequency-domain observation model and linear equalizers.
//!
//! For a target block the receiver takes `Q` samples starting `rx_offset`
//! samples after the block start and applies a unitary `Q`-point DFT. The
//! observation is linear in the rotated symbols of every block whose
//! channel-spread support reaches the window:
//!
//! `y_f = H d_rot + n_f`
//!
//! Columns of `H` are built from the exact channel response of each
//! single-symbol waveform, so samples that leak into the window from earlier
//! blocks are included rather than truncated.

use std::ops::Range;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::FrameConfig;
use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::pulse::PrototypePulse;
use crate::waveform::{frame_amplitude, j_pow, lattice_phase, BlockSynthesizer};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EqualizerKind {
    Mf,
    Ls,
    Mmse,
    OqamMfMmse,
}

impl std::str::FromStr for EqualizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "MF" => Ok(Self::Mf),
            "LS" => Ok(Self::Ls),
            "MMSE" => Ok(Self::Mmse),
            "OQAM_MF_MMSE" | "MF_MMSE" => Ok(Self::OqamMfMmse),
            other => Err(Error::InvalidConfig(format!("unknown equalizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObservationModel {
    /// `Q x (N * blocks)`, columns ordered block-major then subcarrier.
    pub h: Mat<Complex64>,
    /// Slot index `l` of each block in the window.
    pub blocks: Vec<i64>,
    /// Position of the target block within `blocks`.
    pub target_pos: usize,
    pub subcarriers: usize,
    pub density: f64,
    pub noise_var: f64,
    /// Transmit symbol variance seen by the channel, `1 + evm^2`.
    pub symbol_var: f64,
    /// First absolute sample of the receive window.
    pub window_start: usize,
    pub oqam: bool,
    /// Target-block columns without the channel: the prototype-matched
    /// analysis filters.
    pub prototype: Option<Mat<Complex64>>,
}

/// Smallest half-width `L` for which every block reaching the window of the
/// target is modeled.
pub fn required_window(pulse_len: usize, channel_span: usize, cfg: &FrameConfig) -> usize {
    let (lo, hi) = block_offsets(pulse_len, channel_span, cfg);
    lo.unsigned_abs().max(hi.unsigned_abs()) as usize
}

/// Relative block offsets `m` whose received support overlaps the window.
fn block_offsets(pulse_len: usize, channel_span: usize, cfg: &FrameConfig) -> (i64, i64) {
    let ns = cfg.samples_per_symbol as i64;
    let off = cfg.rx_offset as i64;
    let q = cfg.dft_len as i64;
    let support = (pulse_len + channel_span - 1) as i64;
    // m N_s < off + Q  and  m N_s + support > off
    let hi = (off + q - 1).div_euclid(ns);
    let lo = -(support - off - 1).div_euclid(ns);
    (lo, hi)
}

/// Shift-in-frequency matrix `F Z^shift F^H` for a circular delay.
pub fn shift_matrix(q: usize, shift: usize) -> Mat<Complex64> {
    let w = std::f64::consts::TAU / q as f64;
    Mat::from_fn(q, q, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, -w * (r * (shift % q)) as f64)
        } else {
            ZERO
        }
    })
}

/// Time-domain pulse bank: column `k` is the unit-energy block for a unit
/// symbol on subcarrier `k`.
pub fn pulse_bank(pulse: &PrototypePulse, cfg: &FrameConfig) -> Vec<Vec<Complex64>> {
    let synth = BlockSynthesizer::new(cfg);
    (0..cfg.subcarriers)
        .map(|k| {
            let mut col = vec![ZERO; cfg.subcarriers];
            col[k] = Complex64::new(1.0, 0.0);
            synth.synthesize(&col, pulse)
        })
        .collect()
}

/// Model for the block in slot `target`, using `L` blocks of context on each
/// side (clipped to the frame).
pub fn build_observation(
    channel: &ChannelRealization,
    pulse: &PrototypePulse,
    cfg: &FrameConfig,
    half_window: usize,
    target: i64,
    noise_var: f64,
    evm: f64,
) -> Result<ObservationModel> {
    let bank = pulse_bank(pulse, cfg);
    build_observation_with_bank(channel, &bank, pulse.len(), cfg, half_window, target, noise_var, evm)
}

#[allow(clippy::too_many_arguments)]
pub fn build_observation_with_bank(
    channel: &ChannelRealization,
    bank: &[Vec<Complex64>],
    pulse_len: usize,
    cfg: &FrameConfig,
    half_window: usize,
    target: i64,
    noise_var: f64,
    evm: f64,
) -> Result<ObservationModel> {
    let span = channel.span_samples();
    let required = required_window(pulse_len, span, cfg);
    if half_window < required {
        return Err(Error::WindowTooSmall { given: half_window, required });
    }
    let g = cfg.half_len as i64;
    if target.abs() > g {
        return Err(Error::BlockOutOfRange { block: (target + g).max(0) as usize, duration: cfg.slots() });
    }
    let (lo, hi) = block_offsets(pulse_len, span, cfg);
    let ns = cfg.samples_per_symbol;
    let c0 = (target + g) as usize;
    let window_start = c0 * ns + cfg.rx_offset;
    let q = cfg.dft_len;
    if window_start + q > channel.duration() {
        return Err(Error::BlockOutOfRange { block: c0, duration: channel.duration() });
    }
    let blocks: Vec<i64> = (lo..=hi).map(|m| target + m).filter(|l| l.abs() <= g).collect();
    let target_pos = blocks.iter().position(|&l| l == target).expect("target is inside its own window");
    let n = cfg.subcarriers;
    let amp = frame_amplitude(cfg);
    let dft = Dft::new(q);
    let mut h = Mat::<Complex64>::zeros(q, n * blocks.len());
    let mut prototype = Mat::<Complex64>::zeros(q, n);
    let tstart = c0 * ns;
    for (k, col) in bank.iter().enumerate() {
        let dst = prototype.col_as_slice_mut(k);
        for (i, d) in dst.iter_mut().enumerate() {
            *d = col.get((window_start + i).wrapping_sub(tstart)).copied().unwrap_or(ZERO) * amp;
        }
        dft.forward(dst);
    }
    for (b, &l) in blocks.iter().enumerate() {
        let start = (l + g) as usize * ns;
        for (k, col) in bank.iter().enumerate() {
            let mut y = channel.convolve_window(col, start, window_start, q);
            dft.forward(&mut y);
            let dst = h.col_as_slice_mut(b * n + k);
            for (d, v) in dst.iter_mut().zip(&y) {
                *d = v * amp;
            }
        }
    }
    Ok(ObservationModel {
        h,
        blocks,
        target_pos,
        subcarriers: n,
        density: cfg.density(),
        noise_var,
        symbol_var: 1.0 + evm * evm,
        window_start,
        oqam: cfg.scheme.is_oqam(),
        prototype: Some(prototype),
    })
}

impl ObservationModel {
    /// Wrap an arbitrary matrix; the target occupies columns `target`.
    pub fn from_matrix(h: Mat<Complex64>, target: Range<usize>, noise_var: f64) -> Self {
        let n = target.len();
        assert!(n > 0 && h.ncols().is_multiple_of(n) && target.start.is_multiple_of(n), "target must align with a block");
        let blocks = (0..(h.ncols() / n) as i64).collect();
        Self {
            h,
            blocks,
            target_pos: target.start / n,
            subcarriers: n,
            density: 1.0,
            noise_var,
            symbol_var: 1.0,
            window_start: 0,
            oqam: false,
            prototype: None,
        }
    }

    pub fn target_slot(&self) -> i64 {
        self.blocks[self.target_pos]
    }

    pub fn target_columns(&self) -> Range<usize> {
        let n = self.subcarriers;
        self.target_pos * n..(self.target_pos + 1) * n
    }

    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    /// Noiseless prediction `H d_rot` for the rotated symbols of the window
    /// blocks, given block-major.
    pub fn predict(&self, d_rot: &[Complex64]) -> Result<Vec<Complex64>> {
        if d_rot.len() != self.h.ncols() {
            return Err(Error::Dimension(format!("{} symbols for {} columns", d_rot.len(), self.h.ncols())));
        }
        let x = Mat::from_fn(d_rot.len(), 1, |i, _| d_rot[i]);
        let y = &self.h * &x;
        Ok(y.col_as_slice(0).to_vec())
    }

    /// Rotated symbols of the window blocks gathered from a frame grid.
    pub fn window_symbols(&self, grid: &crate::waveform::SymbolGrid) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.h.ncols());
        for &l in &self.blocks {
            out.extend(grid.column(l));
        }
        out
    }
}

/// Window and transform received samples for the model's target block.
pub fn observe(rx: &[Complex64], window_start: usize, dft: &Dft) -> Result<Vec<Complex64>> {
    let q = dft.len();
    if window_start + q > rx.len() {
        return Err(Error::Dimension(format!("window [{window_start}, {}) beyond {} samples", window_start + q, rx.len())));
    }
    let mut y = rx[window_start..window_start + q].to_vec();
    dft.forward(&mut y);
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct Equalizer {
    pub kind: EqualizerKind,
    /// `N x Q`
    pub g: Mat<Complex64>,
    /// `eps_l[k] = e^{-j 2 pi delta_t delta_f k l}` for the model's target slot.
    pub phase_comp: Vec<Complex64>,
    density: f64,
    oqam: bool,
}

/// Phase compensation vector for slot `l`.
pub fn phase_compensation(n: usize, density: f64, l: i64) -> Vec<Complex64> {
    (0..n).map(|k| lattice_phase(density, k, l).conj()).collect()
}

fn target_block(model: &ObservationModel) -> Mat<Complex64> {
    let r = model.target_columns();
    model.h.subcols(r.start, r.len()).to_owned()
}

fn hermitian_solve(a: &Mat<Complex64>, rhs: &Mat<Complex64>) -> Result<Mat<Complex64>> {
    match a.llt(Side::Lower) {
        Ok(llt) => Ok(llt.solve(rhs)),
        Err(_) => Ok(a.partial_piv_lu().solve(rhs)),
    }
}

/// Precomputed Gram matrix so MMSE filters for many noise levels share one
/// product.
#[derive(Debug, Clone)]
pub struct MmseSolver {
    gram: Mat<Complex64>,
    /// Gram of the short side: `H^H H` when the model has fewer columns than
    /// rows, otherwise `H H^H`.
    column_side: bool,
}

impl MmseSolver {
    pub fn new(model: &ObservationModel) -> Self {
        let h = &model.h;
        let column_side = h.ncols() < h.nrows();
        let gram = if column_side { h.adjoint() * h } else { h * h.adjoint() };
        Self { gram, column_side }
    }

    /// `G = H_t^H (alpha H H^H + s^2 I)^{-1}` for `s^2 = noise_var`.
    pub fn filter(&self, model: &ObservationModel, noise_var: f64) -> Result<Mat<Complex64>> {
        if !(noise_var > 0.0) {
            return Err(Error::NonPositiveNoise);
        }
        let alpha = model.symbol_var;
        let dim = self.gram.nrows();
        let a = Mat::from_fn(dim, dim, |i, j| {
            let v = self.gram[(i, j)] * alpha;
            if i == j {
                v + noise_var
            } else {
                v
            }
        });
        let t = model.target_columns();
        if self.column_side {
            // push-through: rows t of (alpha H^H H + s^2 I)^{-1} H^H
            let e = Mat::from_fn(dim, t.len(), |i, j| if i == t.start + j { Complex64::new(1.0, 0.0) } else { ZERO });
            let y = hermitian_solve(&a, &e)?;
            Ok((&model.h * &y).adjoint().to_owned())
        } else {
            let ht = target_block(model);
            let x = hermitian_solve(&a, &ht)?;
            Ok(x.adjoint().to_owned())
        }
    }
}

fn ls_filter(model: &ObservationModel) -> Result<Mat<Complex64>> {
    let svd = model.h.thin_svd().map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i].re).fold(0.0, f64::max);
    let rank = (0..s.nrows()).filter(|&i| s[i].re > 1e-10 * smax).count();
    let full = model.h.nrows().min(model.h.ncols());
    if rank < full {
        return Err(Error::RankDeficient { rank, full });
    }
    let t = model.target_columns();
    let v = svd.V();
    let u = svd.U();
    // rows t of V S^+ U^H
    let vs = Mat::from_fn(t.len(), rank, |i, j| v[(t.start + i, j)] / s[j].re);
    Ok(&vs * u.subcols(0, rank).adjoint())
}

/// Prototype-matched analysis bank, or the channel-matched filter when the
/// model carries no prototype.
pub fn analysis_filters(model: &ObservationModel) -> Mat<Complex64> {
    match &model.prototype {
        Some(p) => p.adjoint().to_owned(),
        None => target_block(model).adjoint().to_owned(),
    }
}

/// Per-subcarrier MMSE weights applied after the matched filter.
fn mf_stage_weights(model: &ObservationModel, g: &Mat<Complex64>) -> Vec<Complex64> {
    let e = g * &model.h;
    let t = model.target_columns();
    (0..g.nrows())
        .map(|k| {
            let b = e[(k, t.start + k)];
            let mut interf = 0.0;
            for j in 0..e.ncols() {
                interf += e[(k, j)].norm_sqr();
            }
            let noise: f64 = (0..g.ncols()).map(|i| g[(k, i)].norm_sqr()).sum::<f64>() * model.noise_var;
            let denom = model.symbol_var * interf + noise;
            if denom > 0.0 {
                b.conj() / denom
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect()
}

pub fn make_equalizer(model: &ObservationModel, kind: EqualizerKind) -> Result<Equalizer> {
    let g = match kind {
        EqualizerKind::Mf => target_block(model).adjoint().to_owned(),
        EqualizerKind::Ls => ls_filter(model)?,
        EqualizerKind::Mmse => MmseSolver::new(model).filter(model, model.noise_var)?,
        EqualizerKind::OqamMfMmse => {
            let mf = analysis_filters(model);
            let w = mf_stage_weights(model, &mf);
            Mat::from_fn(mf.nrows(), mf.ncols(), |i, j| w[i] * mf[(i, j)])
        }
    };
    Ok(Equalizer::from_filter(kind, g, model))
}

impl Equalizer {
    pub fn from_filter(kind: EqualizerKind, g: Mat<Complex64>, model: &ObservationModel) -> Self {
        Self {
            kind,
            phase_comp: phase_compensation(model.subcarriers, model.density, model.target_slot()),
            g,
            density: model.density,
            oqam: model.oqam,
        }
    }

    pub fn is_oqam(&self) -> bool {
        self.oqam
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    /// `diag(eps_l) G y`
    pub soft: Vec<Complex64>,
    /// `Re(j^{-(k+l)} soft_k)` for offset-QAM frames.
    pub pam: Option<Vec<f64>>,
}

/// Apply the filter to one observation and undo the lattice rotation of slot `l`.
pub fn equalize(eq: &Equalizer, y_f: &[Complex64], l: i64) -> Result<Estimates> {
    if y_f.len() != eq.g.ncols() {
        return Err(Error::Dimension(format!("observation has {} bins, filter expects {}", y_f.len(), eq.g.ncols())));
    }
    let n = eq.g.nrows();
    let eps = phase_compensation(n, eq.density, l);
    let soft: Vec<Complex64> = (0..n)
        .map(|k| {
            let mut acc = ZERO;
            for (i, y) in y_f.iter().enumerate() {
                acc += eq.g[(k, i)] * y;
            }
            acc * eps[k]
        })
        .collect();
    let pam = eq
        .oqam
        .then(|| soft.iter().enumerate().map(|(k, z)| (j_pow(-(k as i64 + l)) * z).re).collect());
    Ok(Estimates { soft, pam })
}
