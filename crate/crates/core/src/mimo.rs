//! Massive-MIMO single-carrier uplink with faster-than-Nyquist signalling.
//!
//! Each of `U` users sends `sqrt(P T_s / N_BS) sum_l d_{u,l} p(t - l T_s)`
//! through independent frequency-selective channels to `N_BS` antennas. The
//! base station correlates every antenna with the received pulse
//! `z_{u,n} = p * h_{u,n}` of the wanted user, sums over antennas and samples
//! at `l T_s`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ase::{mismatched_info, AseCurve, AsePoint, CurveMeta};
use crate::channel::{make_mimo_channels, ChannelProfile, ChannelRealization};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::pulse::PrototypePulse;
use crate::rng::{complex_gaussian_vec, derive_seed, rng_for, stream};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const Z95: f64 = 1.959_963_984_540_054;
/// Effective responses are cut where `|g[m]|^2` drops this far below `g[0]^2`.
pub const TRUNCATION_DB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UplinkInputs {
    Qam(usize),
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UplinkEqualizer {
    #[serde(rename = "ONE_TAP")]
    OneTap,
    #[serde(rename = "FULL_ISI")]
    FullIsi,
}

impl std::str::FromStr for UplinkEqualizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ONE_TAP" => Ok(UplinkEqualizer::OneTap),
            "FULL_ISI" => Ok(UplinkEqualizer::FullIsi),
            other => Err(Error::InvalidConfig(format!("unknown uplink equalizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UplinkScenario {
    pub id: String,
    pub users: usize,
    pub antennas: usize,
    pub pulse: PrototypePulse,
    /// T in samples
    pub period: usize,
    pub delta_t: f64,
    pub inputs: UplinkInputs,
    pub power: f64,
    pub profile: ChannelProfile,
}

impl UplinkScenario {
    /// Symbol spacing `delta_t T` in samples.
    pub fn symbol_step(&self) -> Result<usize> {
        let ns = self.delta_t * self.period as f64;
        if (ns - ns.round()).abs() > 1e-9 || ns < 1.0 {
            return Err(Error::FractionalSymbolPeriod(format!("delta_t*T = {ns} samples")));
        }
        Ok(ns.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.antennas == 0 {
            return Err(Error::InvalidConfig("need at least one user and one antenna".into()));
        }
        if !(self.delta_t > 0.0 && self.delta_t <= 1.0) {
            return Err(Error::Constraint { constraint: "0 < delta_t <= 1".into(), detail: format!("delta_t={}", self.delta_t) });
        }
        if (self.pulse.energy() - 1.0).abs() > 1e-9 {
            return Err(Error::PulseEnergy(self.pulse.energy()));
        }
        if let UplinkInputs::Qam(m) = self.inputs {
            Constellation::qam(m)?;
        }
        self.symbol_step().map(|_| ())
    }

    /// Per-user transmit amplitude on the unit-energy sampled pulse.
    pub fn amplitude(&self) -> Result<f64> {
        Ok((self.power * self.symbol_step()? as f64 / self.antennas as f64).sqrt())
    }

    /// Per-sample noise variance for `P / (N0 / T)` in dB.
    pub fn noise_var(&self, snr_db: f64) -> f64 {
        self.power * self.period as f64 / 10f64.powf(snr_db / 10.0)
    }

    /// `T_s F_tot` in units of T: occupied band `(1 + rolloff) / T`.
    pub fn time_bandwidth(&self) -> f64 {
        self.delta_t * (1.0 + self.pulse.rolloff)
    }

    fn describe(&self) -> String {
        format!(
            "U={} N_BS={} T={} dt={} {:?} {:?} rolloff={} P={} {:?}",
            self.users, self.antennas, self.period, self.delta_t, self.pulse.kind, self.inputs, self.pulse.rolloff, self.power, self.profile
        )
    }
}

/// Effective discrete channel seen by one user after antenna combining.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// `g[v][m + max_lag]` = response from user `v` at lag `m`.
    pub g: Vec<Vec<Complex64>>,
    pub max_lag: usize,
    /// `a g_uu[0]`
    pub gamma: Complex64,
    /// interuser power relative to `|gamma|^2`
    pub interuser_power: f64,
    /// measured variance of `y - gamma d` without thermal noise, relative to `|gamma|^2`
    pub interference_var: f64,
}

impl EffectiveChannel {
    pub fn own(&self, user: usize) -> &[Complex64] {
        &self.g[user]
    }

    pub fn lag(&self, v: usize, m: i64) -> Complex64 {
        let i = m + self.max_lag as i64;
        if i < 0 || i as usize >= self.g[v].len() {
            ZERO
        } else {
            self.g[v][i as usize]
        }
    }
}

/// Output of one simulated channel realization.
#[derive(Debug, Clone)]
pub struct UplinkRealization {
    /// noiseless combined sequences per user
    pub signal: Vec<Vec<Complex64>>,
    /// combined unit-variance noise per user
    pub noise: Vec<Vec<Complex64>>,
    /// transmitted symbols of the evaluated slots
    pub symbols: Vec<Vec<Complex64>>,
    pub labels: Vec<Vec<usize>>,
    pub effective: Vec<EffectiveChannel>,
    pub amplitude: f64,
}

impl UplinkRealization {
    /// `y_u = signal + sqrt(noise_var) noise`
    pub fn sequence(&self, user: usize, noise_var: f64) -> Vec<Complex64> {
        let s = noise_var.sqrt();
        self.signal[user].iter().zip(&self.noise[user]).map(|(a, w)| a + w * s).collect()
    }
}

fn received_pulse(pulse: &[f64], ch: &ChannelRealization) -> Vec<Complex64> {
    let span = ch.span_samples();
    let mut z = vec![ZERO; pulse.len() + span];
    for (k, &d) in ch.delay_indices().iter().enumerate() {
        let h = ch.tap(k, 0);
        for (i, &p) in pulse.iter().enumerate() {
            z[i + d] += h * p;
        }
    }
    z
}

/// `sum_i a[i + shift] conj(b[i])`
fn correlate(a: &[Complex64], b: &[Complex64], shift: i64) -> Complex64 {
    let mut acc = ZERO;
    for (i, bv) in b.iter().enumerate() {
        let j = i as i64 + shift;
        if j >= 0 && (j as usize) < a.len() {
            acc += a[j as usize] * bv.conj();
        }
    }
    acc
}

/// Draw channels for one realization.
pub fn draw_channels(sc: &UplinkScenario, seed: u64) -> Vec<Vec<ChannelRealization>> {
    make_mimo_channels(sc.users, sc.antennas, &sc.profile, derive_seed(seed, &[stream::MIMO]))
}

/// `g_uv[m] = sum_n sum_i z_{v,n}[i + m N_s] conj(z_{u,n}[i])` for all pairs.
pub fn effective_responses(sc: &UplinkScenario, channels: &[Vec<ChannelRealization>]) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let ns = sc.symbol_step()?;
    let z: Vec<Vec<Vec<Complex64>>> = channels
        .iter()
        .map(|per_user| per_user.iter().map(|ch| received_pulse(sc.pulse.samples(), ch)).collect())
        .collect();
    let len = z[0].iter().map(Vec::len).max().unwrap_or(0);
    let max_lag = len.div_ceil(ns);
    let lags = 2 * max_lag + 1;
    Ok((0..sc.users)
        .map(|u| {
            (0..sc.users)
                .map(|v| {
                    (0..lags)
                        .map(|m| {
                            let shift = (m as i64 - max_lag as i64) * ns as i64;
                            (0..sc.antennas).map(|n| correlate(&z[v][n], &z[u][n], shift)).sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

fn truncate(g: Vec<Vec<Vec<Complex64>>>, user: usize) -> (Vec<Vec<Complex64>>, usize) {
    let full = g[user][user].len();
    let centre = full / 2;
    let peak = g[user][user][centre].norm_sqr();
    let floor = peak * 10f64.powf(-TRUNCATION_DB / 10.0);
    let keep = (0..=centre)
        .rev()
        .find(|&m| g[user].iter().any(|gv| gv[centre + m].norm_sqr() > floor || gv[centre - m].norm_sqr() > floor))
        .unwrap_or(0);
    let cut = g[user].iter().map(|gv| gv[centre - keep..=centre + keep].to_vec()).collect();
    (cut, keep)
}

/// Simulate `n_symbols` combined outputs per user for one channel draw.
pub fn simulate_uplink(sc: &UplinkScenario, n_symbols: usize, seed: u64) -> Result<UplinkRealization> {
    sc.validate()?;
    if n_symbols == 0 {
        return Err(Error::TooFewSamples("no symbols requested".into()));
    }
    let channels = draw_channels(sc, seed);
    simulate_with_channels(sc, &channels, n_symbols, seed)
}

pub fn simulate_with_channels(
    sc: &UplinkScenario,
    channels: &[Vec<ChannelRealization>],
    n_symbols: usize,
    seed: u64,
) -> Result<UplinkRealization> {
    let ns = sc.symbol_step()?;
    let a = sc.amplitude()?;
    let p = sc.pulse.samples();
    let span = channels.iter().flatten().map(ChannelRealization::span_samples).max().unwrap_or(0);
    let zlen = p.len() + span;
    let guard = zlen.div_ceil(ns) + 1;
    let total = n_symbols + 2 * guard;
    let cons = match sc.inputs {
        UplinkInputs::Qam(m) => Some(Constellation::qam(m)?),
        UplinkInputs::Gaussian => None,
    };
    let mut symbols = Vec::with_capacity(sc.users);
    let mut labels = Vec::with_capacity(sc.users);
    for u in 0..sc.users {
        let mut rng = rng_for(seed, &[stream::BITS, u as u64]);
        match &cons {
            Some(c) => {
                let idx: Vec<usize> = (0..total).map(|_| rand::Rng::random_range(&mut rng, 0..c.len())).collect();
                symbols.push(idx.iter().map(|&i| c.points()[i]).collect::<Vec<_>>());
                labels.push(idx);
            }
            None => {
                symbols.push(complex_gaussian_vec(&mut rng, total, 1.0));
                labels.push(Vec::new());
            }
        }
    }
    let sig_len = total * ns + zlen;
    let tx: Vec<Vec<Complex64>> = symbols
        .iter()
        .map(|d| {
            let mut x = vec![ZERO; total * ns + p.len()];
            for (l, &s) in d.iter().enumerate() {
                for (i, &pv) in p.iter().enumerate() {
                    x[l * ns + i] += s * pv * a;
                }
            }
            x
        })
        .collect();
    let z: Vec<Vec<Vec<Complex64>>> =
        channels.iter().map(|per_user| per_user.iter().map(|ch| received_pulse(p, ch)).collect()).collect();

    let mut signal = vec![vec![ZERO; n_symbols]; sc.users];
    let mut noise = vec![vec![ZERO; n_symbols]; sc.users];
    for n in 0..sc.antennas {
        let mut r = vec![ZERO; sig_len];
        for (v, x) in tx.iter().enumerate() {
            let ch = &channels[v][n];
            for (k, &d) in ch.delay_indices().iter().enumerate() {
                let h = ch.tap(k, 0);
                for (i, xv) in x.iter().enumerate() {
                    r[i + d] += h * xv;
                }
            }
        }
        let w = complex_gaussian_vec(&mut rng_for(seed, &[stream::NOISE, n as u64]), sig_len, 1.0);
        for u in 0..sc.users {
            let zu = &z[u][n];
            for l in 0..n_symbols {
                let off = ((l + guard) * ns) as i64;
                signal[u][l] += correlate(&r, zu, off);
                noise[u][l] += correlate(&w, zu, off);
            }
        }
    }

    let g_all = effective_responses(sc, channels)?;
    let mut effective = Vec::with_capacity(sc.users);
    let mut tx_syms = Vec::with_capacity(sc.users);
    let mut tx_labels = Vec::with_capacity(sc.users);
    for u in 0..sc.users {
        let (g, max_lag) = truncate(g_all.clone(), u);
        let gamma = g[u][max_lag] * a;
        let g2 = gamma.norm_sqr();
        let interuser: f64 = (0..sc.users)
            .filter(|&v| v != u)
            .map(|v| g[v].iter().map(|x| x.norm_sqr()).sum::<f64>() * a * a)
            .sum::<f64>()
            / g2;
        let d = &symbols[u][guard..guard + n_symbols];
        let resid: f64 = signal[u].iter().zip(d).map(|(y, x)| (y - gamma * x).norm_sqr()).sum::<f64>() / n_symbols as f64;
        effective.push(EffectiveChannel { g, max_lag, gamma, interuser_power: interuser, interference_var: resid / g2 });
        tx_syms.push(d.to_vec());
        tx_labels.push(if labels[u].is_empty() { Vec::new() } else { labels[u][guard..guard + n_symbols].to_vec() });
    }
    Ok(UplinkRealization { signal, noise, symbols: tx_syms, labels: tx_labels, effective, amplitude: a })
}

/// Gaussian-input rate of `y = g * d + interference + noise` with an ideal
/// ISI equalizer; interuser interference and noise enter through their PSDs.
pub fn full_isi_rate(eff: &EffectiveChannel, user: usize, amplitude: f64, noise_var: f64, with_interference: bool, nfft: usize) -> f64 {
    let a2 = amplitude * amplitude;
    let resp = |gv: &[Complex64], w: f64| -> Complex64 {
        gv.iter()
            .enumerate()
            .map(|(i, g)| g * Complex64::from_polar(1.0, -w * (i as f64 - eff.max_lag as f64)))
            .sum()
    };
    (0..nfft)
        .map(|m| {
            let w = 2.0 * std::f64::consts::PI * m as f64 / nfft as f64;
            let own = resp(&eff.g[user], w).re.max(0.0);
            let mut interf = 0.0;
            if with_interference {
                for (v, gv) in eff.g.iter().enumerate() {
                    if v != user {
                        interf += a2 * resp(gv, w).norm_sqr();
                    }
                }
            }
            let denom = noise_var * own + interf;
            if own <= 0.0 {
                0.0
            } else {
                (1.0 + a2 * own * own / denom).log2()
            }
        })
        .sum::<f64>()
        / nfft as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkOptions {
    pub equalizer: UplinkEqualizer,
    /// drop interuser interference and ISI: the "AWGN" reference
    pub remove_interference: bool,
    pub n_channels: usize,
    pub n_symbols: usize,
    pub nfft: usize,
}

impl UplinkOptions {
    pub fn new(equalizer: UplinkEqualizer, n_channels: usize, n_symbols: usize) -> Self {
        Self { equalizer, remove_interference: false, n_channels, n_symbols, nfft: 512 }
    }
}

/// Per-user information (bits per channel use) at every SNR for one realization.
fn realization_rates(sc: &UplinkScenario, snr_db: &[f64], opt: &UplinkOptions, seed: u64) -> Result<Vec<Vec<f64>>> {
    let real = simulate_uplink(sc, opt.n_symbols, seed)?;
    let cons = match sc.inputs {
        UplinkInputs::Qam(m) => Some(Constellation::qam(m)?),
        UplinkInputs::Gaussian => None,
    };
    let mut out = vec![vec![0.0; snr_db.len()]; sc.users];
    for u in 0..sc.users {
        let eff = &real.effective[u];
        for (p, &s) in snr_db.iter().enumerate() {
            let nv = sc.noise_var(s);
            out[u][p] = match opt.equalizer {
                UplinkEqualizer::FullIsi => {
                    if cons.is_some() {
                        return Err(Error::InvalidConfig("FULL_ISI is evaluated with Gaussian inputs".into()));
                    }
                    full_isi_rate(eff, u, real.amplitude, nv, !opt.remove_interference, opt.nfft)
                }
                UplinkEqualizer::OneTap => {
                    let d = &real.symbols[u];
                    let y: Vec<Complex64> = if opt.remove_interference {
                        let sd = nv.sqrt();
                        d.iter().zip(&real.noise[u]).map(|(x, w)| eff.gamma * x + w * sd).collect()
                    } else {
                        real.sequence(u, nv)
                    };
                    let n0 = y.iter().zip(d).map(|(y, x)| (y - eff.gamma * x).norm_sqr()).sum::<f64>() / y.len() as f64;
                    if !(n0.is_finite() && n0 > 0.0) {
                        return Err(Error::DivergentVariance(format!("N0={n0} for user {u}")));
                    }
                    match &cons {
                        Some(c) => {
                            y.iter()
                                .zip(&real.labels[u])
                                .map(|(z, &l)| mismatched_info(*z, c.points()[l], c.points(), eff.gamma, n0))
                                .sum::<f64>()
                                / y.len() as f64
                        }
                        None => (1.0 + eff.gamma.norm_sqr() / n0).log2(),
                    }
                }
            };
        }
    }
    Ok(out)
}

fn half_width(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::INFINITY;
    }
    let r = v.len() as f64;
    let m = v.iter().sum::<f64>() / r;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r - 1.0);
    Z95 * (var / r).sqrt()
}

/// Per-user ASE curves in b/s/Hz.
pub fn uplink_ase(sc: &UplinkScenario, snr_db: &[f64], opt: &UplinkOptions, seed: u64) -> Result<Vec<AseCurve>> {
    sc.validate()?;
    if opt.n_channels == 0 || opt.n_symbols == 0 {
        return Err(Error::TooFewSamples(format!("{} channels x {} symbols", opt.n_channels, opt.n_symbols)));
    }
    if snr_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("SNR grid must be strictly increasing".into()));
    }
    let runs: Vec<Vec<Vec<f64>>> = (0..opt.n_channels)
        .into_par_iter()
        .map(|r| realization_rates(sc, snr_db, opt, derive_seed(seed, &[stream::REALIZATION, r as u64])))
        .collect::<Result<_>>()?;
    let norm = 1.0 / sc.time_bandwidth();
    let hash = crate::ase::stable_hash(&format!("{}|{:?}", sc.describe(), opt));
    Ok((0..sc.users)
        .map(|u| AseCurve {
            scenario_id: format!("{}-user{u}", sc.id),
            meta: CurveMeta {
                config_hash: hash.clone(),
                profile: format!("{} taps, f_d={} Hz", sc.profile.tap_delays.len(), sc.profile.doppler_hz),
                equalizer: format!("{:?}", opt.equalizer),
                evm: 0.0,
                seed,
            },
            points: snr_db
                .iter()
                .enumerate()
                .map(|(p, &s)| {
                    let vals: Vec<f64> = runs.iter().map(|r| r[u][p]).collect();
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    AsePoint {
                        snr_db: s,
                        ase: mean.max(0.0) * norm,
                        half_width: half_width(&vals) * norm,
                        n_symbols: opt.n_symbols * opt.n_channels,
                        n_channels: opt.n_channels,
                    }
                })
                .collect(),
        })
        .collect())
}

/// Average of per-user curves, as reported for the uplink figures.
pub fn average_users(curves: &[AseCurve], id: &str) -> Result<AseCurve> {
    let first = curves.first().ok_or_else(|| Error::InvalidConfig("no curves to average".into()))?;
    let u = curves.len() as f64;
    let points = (0..first.points.len())
        .map(|p| {
            let ase = curves.iter().map(|c| c.points[p].ase).sum::<f64>() / u;
            let hw = (curves.iter().map(|c| c.points[p].half_width.powi(2)).sum::<f64>()).sqrt() / u;
            AsePoint { ase, half_width: hw, ..first.points[p].clone() }
        })
        .collect();
    Ok(AseCurve { scenario_id: id.to_string(), meta: first.meta.clone(), points })
}

/// Mean interuser power relative to the wanted signal, over users and draws.
pub fn interuser_power(sc: &UplinkScenario, n_channels: usize, seed: u64) -> Result<f64> {
    sc.validate()?;
    let vals: Vec<f64> = (0..n_channels)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let ch = draw_channels(sc, derive_seed(seed, &[stream::REALIZATION, r as u64]));
            let g = effective_responses(sc, &ch)?;
            let a2 = sc.amplitude()?.powi(2);
            let c = g[0][0].len() / 2;
            let mut acc = 0.0;
            for u in 0..sc.users {
                let own = a2 * g[u][u][c].norm_sqr();
                let other: f64 = (0..sc.users)
                    .filter(|&v| v != u)
                    .map(|v| g[u][v].iter().map(|x| x.norm_sqr()).sum::<f64>() * a2)
                    .sum();
                acc += other / own;
            }
            Ok(acc / sc.users as f64)
        })
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
}
