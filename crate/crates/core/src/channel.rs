//! Tapped-delay-line fading channels.
//!
//! Each tap is an independent Rayleigh process generated by a
//! sum-of-sinusoids model with random arrival angles and phases; its
//! autocorrelation approaches `J0(2 pi f_d tau)` as the number of
//! sinusoids grows. Time index `i` counts receive samples of the frame.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, rng_for, stream, SimRng};

pub const SINUSOIDS_PER_TAP: usize = 16;

pub const ETU_DELAYS_NS: [f64; 9] = [0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0];
pub const ETU_POWERS_DB: [f64; 9] = [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    /// Seconds, non-decreasing.
    pub tap_delays: Vec<f64>,
    /// Linear powers summing to one.
    pub tap_powers: Vec<f64>,
    pub doppler_hz: f64,
    /// T_c in seconds.
    pub sample_period: f64,
    /// When false every tap is the deterministic `sqrt(power)`.
    #[serde(default = "fading_default")]
    pub fading: bool,
}

fn fading_default() -> bool {
    true
}

impl ChannelProfile {
    /// Build a profile from linear powers; powers are normalized to unit sum.
    pub fn new(tap_delays: Vec<f64>, tap_powers: Vec<f64>, doppler_hz: f64, sample_period: f64) -> Result<Self> {
        if tap_delays.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if tap_delays.len() != tap_powers.len() {
            return Err(Error::InvalidProfile(format!(
                "{} delays but {} powers",
                tap_delays.len(),
                tap_powers.len()
            )));
        }
        if tap_delays.iter().any(|&d| !(d >= 0.0)) || tap_delays.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidProfile("delays must be non-negative and increasing".into()));
        }
        if tap_powers.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidProfile("tap powers must be positive".into()));
        }
        if !(doppler_hz >= 0.0) || !(sample_period > 0.0) {
            return Err(Error::InvalidProfile(format!("doppler {doppler_hz} Hz, sample period {sample_period} s")));
        }
        let total: f64 = tap_powers.iter().sum();
        Ok(Self {
            tap_delays,
            tap_powers: tap_powers.into_iter().map(|p| p / total).collect(),
            doppler_hz,
            sample_period,
            fading: true,
        })
    }

    pub fn from_db(delays_ns: &[f64], powers_db: &[f64], doppler_hz: f64, sample_period: f64) -> Result<Self> {
        Self::new(
            delays_ns.iter().map(|d| d * 1e-9).collect(),
            powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect(),
            doppler_hz,
            sample_period,
        )
    }

    /// Extended Typical Urban power-delay profile.
    pub fn etu(doppler_hz: f64, sample_period: f64) -> Self {
        Self::from_db(&ETU_DELAYS_NS, &ETU_POWERS_DB, doppler_hz, sample_period).expect("ETU table is valid")
    }

    /// A single unit tap at zero delay.
    pub fn flat(doppler_hz: f64, sample_period: f64) -> Self {
        Self::new(vec![0.0], vec![1.0], doppler_hz, sample_period).expect("flat profile is valid")
    }

    /// Same delays and powers with deterministic taps.
    pub fn without_fading(mut self) -> Self {
        self.fading = false;
        self
    }

    pub fn delay_indices(&self) -> Vec<usize> {
        self.tap_delays.iter().map(|d| (d / self.sample_period).round() as usize).collect()
    }

    pub fn span_samples(&self) -> usize {
        self.delay_indices().into_iter().max().unwrap_or(0) + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `taps[k][i]`: coefficient of tap k at sample time i; a single column
    /// when the channel is time invariant.
    taps: Vec<Vec<Complex64>>,
    delay_indices: Vec<usize>,
    duration: usize,
}

/// One Rayleigh process with unit mean power, `M` sinusoids.
fn sos_process(rng: &mut SimRng, fd_tc: f64, duration: usize, m: usize) -> Vec<Complex64> {
    let theta: f64 = rng.random_range(-PI..PI);
    let phi: f64 = rng.random_range(-PI..PI);
    let terms: Vec<(f64, f64, f64)> = (1..=m)
        .map(|n| {
            let psi: f64 = rng.random_range(-PI..PI);
            let alpha = (2.0 * PI * n as f64 - PI + theta) / (4.0 * m as f64);
            (2.0 * PI * fd_tc * alpha.cos(), psi.cos(), psi.sin())
        })
        .collect();
    let norm = (2.0 / m as f64).sqrt();
    (0..duration)
        .map(|i| {
            let mut re = 0.0;
            let mut im = 0.0;
            for &(w, c, s) in &terms {
                let v = (w * i as f64 + phi).cos();
                re += c * v;
                im += s * v;
            }
            Complex64::new(re * norm, im * norm)
        })
        .collect()
}

/// Draw a realization covering `duration` samples.
pub fn realize_channel(profile: &ChannelProfile, duration: usize, seed: u64) -> Result<ChannelRealization> {
    if profile.tap_delays.is_empty() {
        return Err(Error::EmptyProfile);
    }
    if duration == 0 {
        return Err(Error::InvalidProfile("duration must be positive".into()));
    }
    let mut rng = rng_for(seed, &[stream::CHANNEL]);
    let fd_tc = profile.doppler_hz * profile.sample_period;
    let taps = profile
        .tap_powers
        .iter()
        .map(|&p| {
            if !profile.fading {
                vec![Complex64::new(p.sqrt(), 0.0)]
            } else if profile.doppler_hz == 0.0 {
                vec![complex_gaussian(&mut rng, p)]
            } else {
                let amp = p.sqrt();
                sos_process(&mut rng, fd_tc, duration, SINUSOIDS_PER_TAP).into_iter().map(|c| c * amp).collect()
            }
        })
        .collect();
    Ok(ChannelRealization { taps, delay_indices: profile.delay_indices(), duration })
}

/// Independent time-invariant channels for every user/antenna pair,
/// indexed `[u][n]`.
pub fn make_mimo_channels(users: usize, antennas: usize, profile: &ChannelProfile, seed: u64) -> Vec<Vec<ChannelRealization>> {
    let mut static_profile = profile.clone();
    static_profile.doppler_hz = 0.0;
    (0..users)
        .map(|u| {
            (0..antennas)
                .map(|n| {
                    let s = crate::rng::derive_seed(seed, &[stream::MIMO, u as u64, n as u64]);
                    realize_channel(&static_profile, 1, s).expect("profile validated")
                })
                .collect()
        })
        .collect()
}

impl ChannelRealization {
    /// Time-invariant realization from explicit taps.
    pub fn fixed(delay_indices: Vec<usize>, coefficients: Vec<Complex64>) -> Result<Self> {
        if delay_indices.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if delay_indices.len() != coefficients.len() {
            return Err(Error::InvalidProfile("delay/coefficient count mismatch".into()));
        }
        Ok(Self { taps: coefficients.into_iter().map(|c| vec![c]).collect(), delay_indices, duration: 1 })
    }

    /// Time-varying realization from explicit tap trajectories.
    pub fn varying(delay_indices: Vec<usize>, taps: Vec<Vec<Complex64>>) -> Result<Self> {
        let duration = taps.first().map_or(0, |t| t.len());
        if delay_indices.is_empty() || duration == 0 {
            return Err(Error::EmptyProfile);
        }
        if delay_indices.len() != taps.len() || taps.iter().any(|t| t.len() != duration) {
            return Err(Error::InvalidProfile("ragged tap trajectories".into()));
        }
        Ok(Self { taps, delay_indices, duration })
    }

    pub fn is_time_invariant(&self) -> bool {
        self.taps.iter().all(|t| t.len() == 1)
    }

    pub fn delay_indices(&self) -> &[usize] {
        &self.delay_indices
    }

    pub fn span_samples(&self) -> usize {
        self.delay_indices.iter().max().copied().unwrap_or(0) + 1
    }

    /// Number of samples covered; time-invariant channels cover any time.
    pub fn duration(&self) -> usize {
        if self.is_time_invariant() {
            usize::MAX
        } else {
            self.duration
        }
    }

    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }

    /// Coefficient of tap `k` at sample time `i`.
    pub fn tap(&self, k: usize, i: usize) -> Complex64 {
        let t = &self.taps[k];
        if t.len() == 1 {
            t[0]
        } else {
            t[i.min(t.len() - 1)]
        }
    }

    pub fn tap_trajectory(&self, k: usize) -> &[Complex64] {
        &self.taps[k]
    }

    /// Impulse response `h_{i, j}` at time `i` as a dense vector over lag j.
    pub fn impulse_response(&self, i: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); self.span_samples()];
        for (k, &j) in self.delay_indices.iter().enumerate() {
            h[j] += self.tap(k, i);
        }
        h
    }

    /// `y[i] = sum_k c_{k,i} x[i - j_k]`, output times `start..start+len`,
    /// where `x` occupies absolute times `x_start..x_start+x.len()`.
    pub fn convolve_window(&self, x: &[Complex64], x_start: usize, start: usize, len: usize) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); len];
        for (k, &j) in self.delay_indices.iter().enumerate() {
            for (o, yo) in y.iter_mut().enumerate() {
                let i = start + o;
                if i < j + x_start {
                    continue;
                }
                let src = i - j - x_start;
                if src >= x.len() {
                    continue;
                }
                *yo += self.tap(k, i) * x[src];
            }
        }
        y
    }

    /// Full linear convolution of a stream starting at time 0.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let len = x.len() + self.span_samples() - 1;
        if len > self.duration() {
            return Err(Error::BlockOutOfRange { block: 0, duration: self.duration });
        }
        Ok(self.convolve_window(x, 0, 0, len))
    }
}

/// `[H]_{i,j} = h_{l N_s + i, i - j}` for the `Q` samples of block `l`;
/// row-major `Q x Q`.
pub fn channel_matrix(real: &ChannelRealization, block: usize, q: usize, ns: usize) -> Result<Vec<Complex64>> {
    let start = block * ns;
    if start + q > real.duration() {
        return Err(Error::BlockOutOfRange { block, duration: real.duration });
    }
    let mut h = vec![Complex64::new(0.0, 0.0); q * q];
    for i in 0..q {
        for (k, &j) in real.delay_indices().iter().enumerate() {
            if j <= i {
                h[i * q + i - j] += real.tap(k, start + i);
            }
        }
    }
    Ok(h)
}
