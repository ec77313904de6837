//! Closed-form spectral efficiency and simulated achievable spectral
//! efficiency (ASE).
//!
//! The ASE of a linear receiver is estimated with a per-symbol Gaussian
//! auxiliary channel `z = beta x + w`, `w ~ CN(0, N0)`: the mismatched
//! information `log2 q(z|x) / sum_x' q(z|x') P(x')` averaged over simulated
//! received symbols is a rate achievable by a detector that uses `q`. Gain
//! `beta` and `N0` per subcarrier follow from the observation model: the
//! interference coefficients `diag(eps) G H`, the EVM variance and the noise
//! enhancement `||g_k||^2`.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{realize_channel, ChannelProfile, ChannelRealization};
use crate::config::{FrameConfig, Scheme};
use crate::constellation::Constellation;
use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::pulse::PrototypePulse;
use crate::receiver::{
    analysis_filters, build_observation_with_bank, equalize, observe, phase_compensation, pulse_bank, required_window, Equalizer,
    EqualizerKind, MmseSolver, ObservationModel,
};
use crate::rng::{complex_gaussian, complex_gaussian_vec, derive_seed, rng_for, stream};
use crate::waveform::{apply_evm, j_pow, lattice_phase, random_grid, synthesize_frame, SymbolGrid};

/// Noise powers are quoted on this bandwidth.
pub const REFERENCE_BANDWIDTH_HZ: f64 = 1.92e6;

const Z95: f64 = 1.959_963_984_540_054;

/// Closed-form spectral efficiency in b/s/Hz.
#[allow(clippy::too_many_arguments)]
pub fn spectral_efficiency(
    scheme: Scheme,
    order: usize,
    code_rate: f64,
    delta_t: f64,
    delta_f: f64,
    subcarriers: usize,
    cp_len: usize,
    zeta_g: f64,
    rolloff: f64,
) -> Result<f64> {
    let bits = match scheme {
        Scheme::FbmcOqam | Scheme::TfsOqam => Constellation::oqam_pam(order)?.bits_per_symbol() as f64 * 2.0,
        _ => Constellation::qam(order)?.bits_per_symbol() as f64,
    };
    let dd = delta_t * delta_f;
    let fail = |c: &str| Err(Error::Constraint { constraint: c.into(), detail: format!("delta_t*delta_f={dd}") });
    if !(zeta_g > 0.0 && zeta_g <= 1.0) {
        return Err(Error::Constraint { constraint: "0 < zeta_g <= 1".into(), detail: format!("zeta_g={zeta_g}") });
    }
    Ok(match scheme {
        Scheme::Ofdm => {
            if subcarriers == 0 {
                return Err(Error::InvalidConfig("N must be positive".into()));
            }
            code_rate * subcarriers as f64 * zeta_g * bits / (subcarriers + cp_len) as f64
        }
        Scheme::FbmcQam if dd < 1.0 - 1e-9 => return fail("delta_t*delta_f >= 1"),
        Scheme::FbmcOqam if dd < 0.5 - 1e-9 => return fail("delta_t*delta_f >= 0.5"),
        Scheme::TfsQam if dd >= 1.0 - 1e-9 => return fail("delta_t*delta_f < 1"),
        Scheme::TfsOqam if dd >= 0.5 - 1e-9 => return fail("delta_t*delta_f < 0.5"),
        Scheme::FbmcQam | Scheme::TfsQam => code_rate * bits / dd,
        Scheme::FbmcOqam | Scheme::TfsOqam => code_rate * bits / (2.0 * dd),
        Scheme::Scm => {
            if !(0.0..=1.0).contains(&rolloff) {
                return Err(Error::InvalidConfig(format!("rolloff {rolloff} outside [0, 1]")));
            }
            code_rate * zeta_g * bits / (1.0 + rolloff)
        }
    })
}

fn log2_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()) / std::f64::consts::LN_2
}

/// Mismatched information of one complex sample, bits.
pub fn mismatched_info(z: Complex64, sent: Complex64, points: &[Complex64], beta: Complex64, n0: f64) -> f64 {
    let d0 = (z - beta * sent).norm_sqr();
    let metric: Vec<f64> = points.iter().map(|&x| -((z - beta * x).norm_sqr() - d0) / n0).collect();
    (points.len() as f64).log2() - log2_sum_exp(&metric)
}

/// Real-valued counterpart for PAM symbols; `var` is the real noise variance.
pub fn mismatched_info_real(r: f64, sent: f64, levels: &[f64], beta: f64, var: f64) -> f64 {
    let d0 = (r - beta * sent).powi(2);
    let metric: Vec<f64> = levels.iter().map(|&x| -((r - beta * x).powi(2) - d0) / (2.0 * var)).collect();
    (levels.len() as f64).log2() - log2_sum_exp(&metric)
}

/// Empirical Gaussian-input information `log2 q(z|x)/q(z)` with
/// `q(z|x) = CN(beta x, n0)` and `q(z) = CN(0, |beta|^2 + n0)`.
pub fn gaussian_info(z: Complex64, x: Complex64, beta: Complex64, n0: f64) -> f64 {
    let s = beta.norm_sqr() + n0;
    ((s / n0).ln() - (z - beta * x).norm_sqr() / n0 + z.norm_sqr() / s) / std::f64::consts::LN_2
}

/// Monte-Carlo constrained capacity over scalar AWGN at `es_n0_db`;
/// returns mean and 95% half-width in bits per symbol.
pub fn awgn_constrained_capacity(cons: &Constellation, es_n0_db: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::TooFewSamples(format!("{samples} samples")));
    }
    let n0 = 10f64.powf(-es_n0_db / 10.0);
    let mut rng = rng_for(seed, &[stream::NOISE]);
    let pts = cons.points();
    let levels: Vec<f64> = pts.iter().map(|p| p.re).collect();
    let one = Complex64::new(1.0, 0.0);
    let info: Vec<f64> = (0..samples)
        .map(|i| {
            let x = pts[i % pts.len()];
            if cons.is_real() {
                let w: f64 = complex_gaussian(&mut rng, n0).re;
                mismatched_info_real(x.re + w, x.re, &levels, 1.0, n0 / 2.0)
            } else {
                let z = x + complex_gaussian(&mut rng, n0);
                mismatched_info(z, x, pts, one, n0)
            }
        })
        .collect();
    Ok(mean_and_half_width(&info, 20))
}

fn mean_and_half_width(v: &[f64], batches: usize) -> (f64, f64) {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let b = batches.min(n).max(1);
    let size = n / b;
    if b < 2 || size == 0 {
        return (mean, f64::INFINITY);
    }
    let means: Vec<f64> = (0..b).map(|i| v[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64).collect();
    (mean, half_width(&means))
}

fn half_width(means: &[f64]) -> f64 {
    let r = means.len() as f64;
    let m = means.iter().sum::<f64>() / r;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r - 1.0);
    Z95 * (var / r).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsePoint {
    pub snr_db: f64,
    pub ase: f64,
    pub half_width: f64,
    pub n_symbols: usize,
    pub n_channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub config_hash: String,
    pub profile: String,
    pub equalizer: String,
    pub evm: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AseCurve {
    pub scenario_id: String,
    pub meta: CurveMeta,
    pub points: Vec<AsePoint>,
}

impl AseCurve {
    /// Rows `scenario_id,snr_db,ase_bps_hz,ci_half_width,n_symbols,n_channels,seed`.
    pub fn write_csv<W: Write>(&self, w: W, with_header: bool) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        if with_header {
            wr.write_record(CSV_HEADER)?;
        }
        for p in &self.points {
            wr.write_record([
                self.scenario_id.clone(),
                format!("{:.3}", p.snr_db),
                format!("{:.6}", p.ase),
                format!("{:.6}", p.half_width),
                p.n_symbols.to_string(),
                p.n_channels.to_string(),
                self.meta.seed.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 7] = ["scenario_id", "snr_db", "ase_bps_hz", "ci_half_width", "n_symbols", "n_channels", "seed"];

/// FNV-1a over a textual description, stable across runs and platforms.
pub fn stable_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Everything needed to simulate one link.
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub id: String,
    pub frame: FrameConfig,
    pub pulse: PrototypePulse,
    pub profile: ChannelProfile,
    pub equalizer: EqualizerKind,
    pub evm: f64,
    /// F_tot in Hz; defaults to `N delta_f / T`.
    pub total_bandwidth: Option<f64>,
    pub reference_bandwidth: f64,
}

impl LinkScenario {
    pub fn new(id: impl Into<String>, frame: FrameConfig, pulse: PrototypePulse, profile: ChannelProfile, equalizer: EqualizerKind) -> Self {
        Self {
            id: id.into(),
            frame,
            pulse,
            profile,
            equalizer,
            evm: 0.0,
            total_bandwidth: None,
            reference_bandwidth: REFERENCE_BANDWIDTH_HZ,
        }
    }

    /// Per-sample noise variance for `P / P_n` in dB on the reference band.
    pub fn noise_var(&self, snr_db: f64) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        self.frame.power * self.frame.sample_rate() / (snr * self.reference_bandwidth)
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.total_bandwidth
            .unwrap_or(self.frame.subcarriers as f64 * self.frame.subcarrier_spacing())
    }

    /// Factor turning information per (real or complex) lattice symbol into b/s/Hz.
    pub fn normalization(&self) -> f64 {
        self.frame.guard_efficiency * self.frame.subcarriers as f64 / (self.frame.symbol_period * self.total_bandwidth())
    }

    fn describe(&self) -> String {
        format!("{:?}|{:?}|{:?}|{:?}|{}|{:?}", self.frame, self.pulse.kind, self.profile, self.equalizer, self.evm, self.total_bandwidth)
    }

    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.evm < 0.0 {
            return Err(Error::NegativeEvm(self.evm));
        }
        if (self.pulse.energy() - 1.0).abs() > 1e-9 {
            return Err(Error::PulseEnergy(self.pulse.energy()));
        }
        let dt = 1.0 / self.frame.sample_rate();
        if (self.profile.sample_period - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidConfig(format!(
                "channel sample period {} s differs from frame sample period {dt} s",
                self.profile.sample_period
            )));
        }
        Ok(())
    }
}

/// Gain, interference and noise gain seen by each subcarrier of a target block.
#[derive(Debug, Clone)]
struct OutputStats {
    beta: Vec<f64>,
    beta_c: Vec<Complex64>,
    /// interference plus EVM variance, excluding thermal noise
    interference: Vec<f64>,
    /// multiplies the per-sample noise variance
    noise_gain: Vec<f64>,
}

impl OutputStats {
    fn n0(&self, k: usize, noise_var: f64) -> f64 {
        self.interference[k] + noise_var * self.noise_gain[k]
    }

}

fn row_gains(g: &Mat<Complex64>) -> Vec<f64> {
    (0..g.nrows()).map(|k| (0..g.ncols()).map(|i| g[(k, i)].norm_sqr()).sum()).collect()
}

fn filter_stats(model: &ObservationModel, g: &Mat<Complex64>, slot: i64, evm: f64) -> OutputStats {
    output_stats(model, &(g * &model.h), &row_gains(g), slot, evm)
}

/// Statistics of `z = diag(eps) E d_rot + G w` given `E = G H` and the
/// squared row norms of `G`.
fn output_stats(model: &ObservationModel, e: &Mat<Complex64>, gains: &[f64], slot: i64, evm: f64) -> OutputStats {
    let n = model.subcarriers;
    let t = model.target_columns();
    let eps = phase_compensation(n, model.density, slot);
    let shift = slot - model.target_slot();
    let alpha = 1.0 + evm * evm;
    let mut out = OutputStats {
        beta: vec![0.0; n],
        beta_c: vec![Complex64::new(0.0, 0.0); n],
        interference: vec![0.0; n],
        noise_gain: vec![0.0; n],
    };
    for k in 0..n {
        let ng = gains[k];
        let mut interf = 0.0;
        let mut total = 0.0;
        let phi_k = j_pow(k as i64 + slot).conj();
        for (b, &l) in model.blocks.iter().enumerate() {
            let l = l + shift;
            for kk in 0..n {
                let j = b * n + kk;
                let c = eps[k] * e[(k, j)] * lattice_phase(model.density, kk, l);
                total += c.norm_sqr();
                if j == t.start + k {
                    if model.oqam {
                        out.beta[k] = (phi_k * c * j_pow(kk as i64 + l)).re;
                    } else {
                        out.beta_c[k] = c;
                    }
                    continue;
                }
                if model.oqam {
                    let r = (phi_k * c * j_pow(kk as i64 + l)).re;
                    interf += r * r;
                } else {
                    interf += c.norm_sqr() * alpha;
                }
            }
        }
        if model.oqam {
            out.interference[k] = interf + 0.5 * evm * evm * total;
            out.noise_gain[k] = 0.5 * ng;
        } else {
            out.interference[k] = interf + out.beta_c[k].norm_sqr() * evm * evm;
            out.noise_gain[k] = ng;
        }
    }
    out
}

/// Output SINR per subcarrier when filter `g` is applied to the block in
/// `slot`; the auxiliary-channel gain over its total disturbance.
pub fn subcarrier_sinr(model: &ObservationModel, g: &Mat<Complex64>, slot: i64, evm: f64, noise_var: f64) -> Vec<f64> {
    let s = filter_stats(model, g, slot, evm);
    (0..model.subcarriers)
        .map(|k| {
            let b2 = if model.oqam { s.beta[k].powi(2) } else { s.beta_c[k].norm_sqr() };
            b2 / s.n0(k, noise_var)
        })
        .collect()
}

enum FilterPlan {
    Fixed(Mat<Complex64>),
    Mmse(MmseSolver),
    /// Analysis filters followed by per-subcarrier scalar MMSE weights;
    /// keeps the unweighted `E` and row gains.
    MfStage { g0: Mat<Complex64>, e0: Mat<Complex64>, gains: Vec<f64> },
}

struct BlockState {
    model: ObservationModel,
    plan: FilterPlan,
    /// stats of the SNR-independent filter, per evaluated slot
    fixed_stats: Vec<Option<OutputStats>>,
}

fn make_plan(model: &ObservationModel, kind: EqualizerKind) -> Result<FilterPlan> {
    Ok(match kind {
        EqualizerKind::Mf | EqualizerKind::Ls => FilterPlan::Fixed(crate::receiver::make_equalizer(model, kind)?.g),
        EqualizerKind::Mmse => FilterPlan::Mmse(MmseSolver::new(model)),
        EqualizerKind::OqamMfMmse => {
            let g0 = analysis_filters(model);
            let e0 = &g0 * &model.h;
            let gains = row_gains(&g0);
            FilterPlan::MfStage { g0, e0, gains }
        }
    })
}

/// Filter rows and output statistics at one noise level.
fn filter_at(state: &mut BlockState, slot_idx: usize, slot: i64, noise_var: f64, evm: f64) -> Result<(Mat<Complex64>, OutputStats)> {
    match &state.plan {
        FilterPlan::Fixed(g) => {
            if state.fixed_stats[slot_idx].is_none() {
                state.fixed_stats[slot_idx] = Some(filter_stats(&state.model, g, slot, evm));
            }
            Ok((g.clone(), state.fixed_stats[slot_idx].clone().expect("set above")))
        }
        FilterPlan::Mmse(solver) => {
            let g = solver.filter(&state.model, noise_var)?;
            let s = filter_stats(&state.model, &g, slot, evm);
            Ok((g, s))
        }
        FilterPlan::MfStage { g0, e0, gains } => {
            let t = state.model.target_columns();
            let alpha = state.model.symbol_var;
            let w: Vec<Complex64> = (0..g0.nrows())
                .map(|k| {
                    let b = e0[(k, t.start + k)];
                    let total: f64 = (0..e0.ncols()).map(|j| e0[(k, j)].norm_sqr()).sum();
                    let denom = alpha * total + noise_var * gains[k];
                    if denom > 0.0 {
                        b.conj() / denom
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            let g = Mat::from_fn(g0.nrows(), g0.ncols(), |i, j| w[i] * g0[(i, j)]);
            let e = Mat::from_fn(e0.nrows(), e0.ncols(), |i, j| w[i] * e0[(i, j)]);
            let gw: Vec<f64> = gains.iter().zip(&w).map(|(v, w)| v * w.norm_sqr()).collect();
            let s = output_stats(&state.model, &e, &gw, slot, evm);
            Ok((g, s))
        }
    }
}

/// Per-realization accumulators for every SNR point.
#[derive(Debug, Clone, Default)]
struct RealizationResult {
    sums: Vec<f64>,
    counts: Vec<usize>,
    /// per-SNR batch means within the realization
    batches: Vec<Vec<f64>>,
}

/// Slots evaluated per realization: data slots with the full interference
/// window inside the frame, nearest the centre first.
fn target_slots(cfg: &FrameConfig, pulse_len: usize, span: usize, wanted: usize) -> Vec<i64> {
    let g = cfg.half_len as i64;
    let l = required_window(pulse_len, span, cfg) as i64;
    let prefix = (cfg.slots() - cfg.data_slots()) as i64;
    let lo = (-g + prefix).max(-g + l);
    let hi = g - l;
    let mut slots: Vec<i64> = if lo <= hi { (lo..=hi).collect() } else { vec![(-g + prefix).max(0).min(g)] };
    let centre = (lo + hi) / 2;
    slots.sort_by_key(|s| ((s - centre).abs(), *s));
    slots.truncate(wanted.max(1));
    slots.sort();
    slots
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Inputs {
    Finite,
    Gaussian,
}

fn run_realization(
    sc: &LinkScenario,
    bank: &[Vec<Complex64>],
    snr_db: &[f64],
    symbols_per_realization: usize,
    seed: u64,
    inputs: Inputs,
) -> Result<RealizationResult> {
    let cfg = &sc.frame;
    let n = cfg.subcarriers;
    let cons = cfg.constellation()?;
    let pts = cons.points().to_vec();
    let levels: Vec<f64> = pts.iter().map(|p| p.re).collect();
    let span = sc.profile.span_samples();
    let frame_len = cfg.frame_samples(sc.pulse.len());
    let channel: ChannelRealization = realize_channel(&sc.profile, frame_len + span, seed)?;
    let grid: SymbolGrid = random_grid(cfg, seed)?;
    let l_win = required_window(sc.pulse.len(), span, cfg);
    let wanted = symbols_per_realization.div_ceil(n);
    let slots = target_slots(cfg, sc.pulse.len(), span, wanted);

    let dft = Dft::new(cfg.dft_len);
    let (clean, noise) = if inputs == Inputs::Finite {
        let tx = apply_evm(&grid, cfg, sc.evm, seed)?;
        let x = synthesize_frame(&tx, &sc.pulse, cfg)?;
        let rx = channel.apply(&x)?;
        let w = complex_gaussian_vec(&mut rng_for(seed, &[stream::NOISE]), rx.len(), 1.0);
        (rx, w)
    } else {
        (Vec::new(), Vec::new())
    };

    let mut res = RealizationResult {
        sums: vec![0.0; snr_db.len()],
        counts: vec![0; snr_db.len()],
        batches: vec![Vec::new(); snr_db.len()],
    };
    let noise_vars: Vec<f64> = snr_db.iter().map(|&s| sc.noise_var(s)).collect();
    let reuse = channel.is_time_invariant();
    let mut shared: Option<BlockState> = None;
    for (si, &slot) in slots.iter().enumerate() {
        let build = |slot: i64| -> Result<BlockState> {
            let model = build_observation_with_bank(&channel, bank, sc.pulse.len(), cfg, l_win, slot, 1.0, sc.evm)?;
            let plan = make_plan(&model, sc.equalizer)?;
            Ok(BlockState { model, plan, fixed_stats: vec![None; slots.len()] })
        };
        let mut own;
        let state: &mut BlockState = if reuse {
            if shared.is_none() {
                shared = Some(build(slot)?);
            }
            shared.as_mut().expect("built above")
        } else {
            own = build(slot)?;
            &mut own
        };
        let window_start = state.model.window_start + ((slot - state.model.target_slot()) * cfg.samples_per_symbol as i64) as usize;
        let (y_clean, y_noise) = if inputs == Inputs::Finite {
            (observe(&clean, window_start, &dft)?, observe(&noise, window_start, &dft)?)
        } else {
            (Vec::new(), Vec::new())
        };
        for (p, &nv) in noise_vars.iter().enumerate() {
            let (g, stats) = filter_at(state, si, slot, nv, sc.evm)?;
            let mut block_sum = 0.0;
            match inputs {
                Inputs::Gaussian => {
                    for k in 0..n {
                        let n0 = stats.n0(k, nv);
                        if !(n0.is_finite() && n0 > 0.0) {
                            return Err(Error::DivergentVariance(format!("N0={n0} on subcarrier {k}")));
                        }
                        block_sum += if state.model.oqam {
                            0.5 * (1.0 + stats.beta[k].powi(2) / n0).log2()
                        } else {
                            (1.0 + stats.beta_c[k].norm_sqr() / n0).log2()
                        };
                    }
                }
                Inputs::Finite => {
                    let sd = nv.sqrt();
                    let y: Vec<Complex64> = y_clean.iter().zip(&y_noise).map(|(c, w)| c + w * sd).collect();
                    let eq = Equalizer::from_filter(sc.equalizer, g, &state.model);
                    let est = equalize(&eq, &y, slot)?;
                    for k in 0..n {
                        let n0 = stats.n0(k, nv);
                        if !(n0.is_finite() && n0 > 0.0) {
                            return Err(Error::DivergentVariance(format!("N0={n0} on subcarrier {k}")));
                        }
                        let label = grid.labels[grid.index(k, slot)];
                        block_sum += match &est.pam {
                            Some(pam) => mismatched_info_real(pam[k], levels[label], &levels, stats.beta[k], n0),
                            None => mismatched_info(est.soft[k], pts[label], &pts, stats.beta_c[k], n0),
                        };
                    }
                }
            }
            res.sums[p] += block_sum;
            res.counts[p] += n;
            res.batches[p].push(block_sum / n as f64);
        }
    }
    Ok(res)
}

fn estimate(
    sc: &LinkScenario,
    snr_db: &[f64],
    n_channels: usize,
    n_symbols: usize,
    seed: u64,
    inputs: Inputs,
) -> Result<AseCurve> {
    sc.validate()?;
    if n_channels == 0 || n_symbols == 0 {
        return Err(Error::TooFewSamples(format!("{n_channels} channels x {n_symbols} symbols")));
    }
    if snr_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("SNR grid must be strictly increasing".into()));
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let bank = pulse_bank(&sc.pulse, &sc.frame);
    let results: Vec<RealizationResult> = (0..n_channels)
        .into_par_iter()
        .map(|r| run_realization(sc, &bank, snr_db, n_symbols, derive_seed(seed, &[stream::REALIZATION, r as u64]), inputs))
        .collect::<Result<_>>()?;
    let norm = sc.normalization();
    let points = snr_db
        .iter()
        .enumerate()
        .map(|(p, &s)| {
            let count: usize = results.iter().map(|r| r.counts[p]).sum();
            let total: f64 = results.iter().map(|r| r.sums[p]).sum();
            let mean = total / count as f64;
            let hw = if results.len() >= 2 {
                half_width(&results.iter().map(|r| r.sums[p] / r.counts[p] as f64).collect::<Vec<_>>())
            } else if results[0].batches[p].len() >= 2 {
                half_width(&results[0].batches[p])
            } else {
                f64::INFINITY
            };
            AsePoint { snr_db: s, ase: (mean * norm).max(0.0), half_width: hw * norm, n_symbols: count, n_channels }
        })
        .collect();
    Ok(AseCurve {
        scenario_id: sc.id.clone(),
        meta: CurveMeta {
            config_hash: stable_hash(&sc.describe()),
            profile: format!("{} taps, f_d={} Hz", sc.profile.tap_delays.len(), sc.profile.doppler_hz),
            equalizer: format!("{:?}", sc.equalizer),
            evm: sc.evm,
            seed,
        },
        points,
    })
}

/// Finite-constellation ASE curve; `n_symbols` is per channel realization.
pub fn estimate_ase(sc: &LinkScenario, snr_db: &[f64], n_channels: usize, n_symbols: usize, seed: u64) -> Result<AseCurve> {
    estimate(sc, snr_db, n_channels, n_symbols, seed, Inputs::Finite)
}

/// Gaussian-input ASE: `log2(1 + SINR_k)` per equalized symbol with
/// interference treated as noise.
pub fn estimate_ase_gaussian_inputs(sc: &LinkScenario, snr_db: &[f64], n_channels: usize, n_symbols: usize, seed: u64) -> Result<AseCurve> {
    estimate(sc, snr_db, n_channels, n_symbols, seed, Inputs::Gaussian)
}
