//! Sampled prototype pulses and their time-frequency ambiguity.
//!
//! Pulses are real, symmetric about sample `floor(Q/2)` (RECT excepted) and
//! normalized to unit energy on the sample grid, `sum |p[n]|^2 = 1`, i.e. time
//! is measured in sample periods. Centering on an integer sample that is a
//! multiple of the half symbol period keeps the offset-QAM phase pattern
//! `j^(k+l)` orthogonal under the block-local phase convention used by the
//! synthesizer.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::config::FrameConfig;
use crate::error::{Error, Result};

/// Frequency samples of the overlap-4 PHYDYAS prototype.
pub const PHYDYAS_K4: [f64; 4] = [1.0, 0.971_960, FRAC_1_SQRT_2, 0.235_147];
pub const PHYDYAS_OVERLAP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PulseKind {
    Rect,
    Rrc,
    Phydyas,
    SincTrunc,
}

impl std::str::FromStr for PulseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RECT" => Ok(PulseKind::Rect),
            "RRC" => Ok(PulseKind::Rrc),
            "PHYDYAS" | "PHYDIAS" => Ok(PulseKind::Phydyas),
            "SINC" | "SINC_TRUNC" => Ok(PulseKind::SincTrunc),
            other => Err(Error::UnsupportedPulse(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypePulse {
    pub kind: PulseKind,
    samples: Vec<f64>,
    pub rolloff: f64,
    /// Design symbol time T in samples.
    pub period: f64,
    pub grid_divisor: usize,
}

/// Closed-form root-raised-cosine impulse response, `t` in symbol periods.
pub fn rrc_value(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

fn phydyas_value(t: f64, active: f64) -> f64 {
    if !(0.0..=active).contains(&t) {
        return 0.0;
    }
    let mut v = PHYDYAS_K4[0];
    for (i, &h) in PHYDYAS_K4.iter().enumerate().skip(1) {
        let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
        v += 2.0 * sign * h * (2.0 * PI * i as f64 * t / active).cos();
    }
    v
}

/// Build a pulse whose design period is `Q / M` samples.
pub fn make_pulse(kind: PulseKind, q: usize, grid_divisor: usize, rolloff: f64) -> Result<PrototypePulse> {
    if grid_divisor == 0 {
        return Err(Error::UnsupportedPulse("grid divisor must be positive".into()));
    }
    make_pulse_with_period(kind, q, q as f64 / grid_divisor as f64, rolloff, grid_divisor)
}

/// Build a pulse with an explicit design period (samples per T); used when
/// the lattice is packed in frequency and T no longer equals Q/M.
pub fn make_pulse_with_period(
    kind: PulseKind,
    q: usize,
    period: f64,
    rolloff: f64,
    grid_divisor: usize,
) -> Result<PrototypePulse> {
    if q == 0 {
        return Err(Error::UnsupportedPulse("pulse length must be positive".into()));
    }
    if !(period > 0.0) {
        return Err(Error::UnsupportedPulse(format!("period {period} must be positive")));
    }
    if matches!(kind, PulseKind::Rrc) && !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::UnsupportedPulse(format!("RRC rolloff {rolloff} outside [0, 1]")));
    }
    let center = (q / 2) as f64;
    let symmetric = |n: usize| !(q.is_multiple_of(2) && n == 0);
    let raw: Vec<f64> = match kind {
        PulseKind::Rect => vec![1.0; q],
        PulseKind::Rrc => (0..q)
            .map(|n| if symmetric(n) { rrc_value((n as f64 - center) / period, rolloff) } else { 0.0 })
            .collect(),
        PulseKind::SincTrunc => (0..q)
            .map(|n| if symmetric(n) { sinc((n as f64 - center) / period) } else { 0.0 })
            .collect(),
        PulseKind::Phydyas => {
            let active = PHYDYAS_OVERLAP as f64 * period;
            if active > q as f64 + 1e-9 {
                return Err(Error::UnsupportedPulse(format!(
                    "PHYDYAS needs {active} samples for overlap {PHYDYAS_OVERLAP}, Q={q}"
                )));
            }
            (0..q)
                .map(|n| if symmetric(n) { phydyas_value(n as f64 - center + active / 2.0, active) } else { 0.0 })
                .collect()
        }
    };
    let energy: f64 = raw.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return Err(Error::UnsupportedPulse(format!("{kind:?} pulse has zero energy")));
    }
    let scale = energy.sqrt().recip();
    Ok(PrototypePulse {
        kind,
        samples: raw.into_iter().map(|v| v * scale).collect(),
        rolloff,
        period,
        grid_divisor,
    })
}

impl PrototypePulse {
    /// Wrap arbitrary samples; they are normalized to unit energy.
    pub fn from_samples(kind: PulseKind, samples: Vec<f64>, period: f64) -> Result<Self> {
        let energy: f64 = samples.iter().map(|v| v * v).sum();
        if energy <= 0.0 {
            return Err(Error::PulseEnergy(energy));
        }
        let s = energy.sqrt().recip();
        Ok(Self { kind, samples: samples.into_iter().map(|v| v * s).collect(), rolloff: 0.0, period, grid_divisor: 1 })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Ambiguity `A(tau, nu) = sum_n p[n] p*[n - tau] e^{-j 2 pi nu n}`,
    /// `tau` in samples and `nu` in cycles per sample.
    pub fn ambiguity(&self, tau: isize, nu: f64) -> Result<Complex64> {
        if tau.unsigned_abs() >= self.len() {
            return Err(Error::ShiftOutOfRange(format!("|tau|={} >= Q={}", tau.abs(), self.len())));
        }
        Ok(cross_ambiguity(&self.samples, &self.samples, tau, nu))
    }

    /// Magnitude spectrum in dB relative to its peak, sampled on an `nfft`
    /// grid. Frequencies are returned in units of 1/T.
    pub fn spectrum_db(&self, nfft: usize) -> Vec<(f64, f64)> {
        let nfft = nfft.max(self.len()).next_power_of_two();
        let mut buf: Vec<Complex64> = self.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(nfft, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
        let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (0..nfft)
            .map(|i| {
                let k = if i < nfft / 2 { i as f64 } else { i as f64 - nfft as f64 };
                let f = k / nfft as f64 * self.period;
                (f, 20.0 * (buf[i].norm() / peak).max(1e-300).log10())
            })
            .collect()
    }

    /// Write `n,real,imag` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "real", "imag"])?;
        for (n, v) in self.samples.iter().enumerate() {
            wr.write_record([n.to_string(), format!("{v:.17e}"), format!("{:.17e}", 0.0)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Cross-ambiguity `sum_n a[n] b*[n - tau] e^{-j 2 pi nu n}` of two real sequences.
pub fn cross_ambiguity(a: &[f64], b: &[f64], tau: isize, nu: f64) -> Complex64 {
    let lo = tau.max(0) as usize;
    let hi = (b.len() as isize + tau).min(a.len() as isize);
    if hi <= lo as isize {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for n in lo..hi as usize {
        let v = a[n] * b[(n as isize - tau) as usize];
        if v != 0.0 {
            acc += Complex64::from_polar(v, -2.0 * PI * nu * n as f64);
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    /// Largest |coefficient| over non-target lattice points.
    pub max_residual: f64,
    /// Largest real-part residual after the offset-QAM phase pattern; only
    /// for offset-QAM schemes.
    pub oqam_residual: Option<f64>,
    /// Total interference power relative to the signal coefficient.
    pub interference_power: f64,
    pub sir_db: f64,
    pub lattice_points: usize,
}

/// Receive prototype implied by the frame: the transmit pulse restricted to
/// the DFT window `[rx_offset, rx_offset + Q)`, scaled so that the
/// transmit-receive correlation at the origin is one.
pub fn receive_prototype(pulse: &PrototypePulse, cfg: &FrameConfig) -> Vec<f64> {
    let p = pulse.samples();
    let lo = cfg.rx_offset.min(p.len());
    let hi = (cfg.rx_offset + cfg.dft_len).min(p.len());
    let mut r = vec![0.0; p.len()];
    r[lo..hi].copy_from_slice(&p[lo..hi]);
    let g: f64 = p[lo..hi].iter().map(|v| v * v).sum();
    if g > 0.0 {
        r.iter_mut().for_each(|v| *v /= g);
    }
    r
}

fn j_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Interference coefficients on the lattice `(l N_s, k delta_f delta_t / N_s)`
/// for the receive prototype of `cfg`, evaluated at a few target positions.
pub fn check_orthogonality(pulse: &PrototypePulse, cfg: &FrameConfig) -> OrthogonalityReport {
    check_orthogonality_with_span(pulse, cfg, 8)
}

pub fn check_orthogonality_with_span(pulse: &PrototypePulse, cfg: &FrameConfig, max_k: usize) -> OrthogonalityReport {
    let p = pulse.samples();
    let r = receive_prototype(pulse, cfg);
    let ns = cfg.samples_per_symbol as isize;
    let f0 = cfg.frequency_step();
    let dd = cfg.density();
    let kmax = max_k.min(cfg.subcarriers.saturating_sub(1)) as i64;
    let lmax = (p.len() as isize + r.len() as isize) / ns + 1;
    let oqam = cfg.scheme.is_oqam();

    let mut max_res: f64 = 0.0;
    let mut max_oqam: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    let mut count = 0;
    for (k0, l0) in [(0i64, 0i64), (1, 0), (0, 1), (1, 1)] {
        if k0 as usize >= cfg.subcarriers {
            continue;
        }
        let signal = cross_ambiguity(p, &r, 0, 0.0);
        let signal_pow = if oqam { signal.re * signal.re } else { signal.norm_sqr() };
        let mut power = 0.0;
        for l in (l0 - lmax as i64)..=(l0 + lmax as i64) {
            for k in (k0 - kmax).max(0)..=(k0 + kmax).min(cfg.subcarriers as i64 - 1) {
                if k == k0 && l == l0 {
                    continue;
                }
                let x = cross_ambiguity(p, &r, (l0 - l) as isize * ns, (k0 - k) as f64 * f0);
                let c = Complex64::from_polar(1.0, 2.0 * PI * (k - k0) as f64 * dd * l as f64) * x;
                max_res = max_res.max(c.norm());
                if oqam {
                    let re = (j_pow(-(k0 + l0)) * j_pow(k + l) * c).re;
                    max_oqam = max_oqam.max(re.abs());
                    power += re * re;
                } else {
                    power += c.norm_sqr();
                }
                count += 1;
            }
        }
        worst_power = worst_power.max(power / signal_pow);
    }
    OrthogonalityReport {
        max_residual: max_res,
        oqam_residual: oqam.then_some(max_oqam),
        interference_power: worst_power,
        sir_db: -10.0 * worst_power.max(1e-300).log10(),
        lattice_points: count,
    }
}
