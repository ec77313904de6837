//! Frame parameterization shared by every modulation family.
//!
//! All families are instances of one lattice model: `N` subcarriers spaced by
//! `delta_f / T`, symbols spaced by `T_s = delta_t * T`, a prototype pulse and
//! a symbol mapping. The discrete-time model samples `N_s` times per symbol
//! period and projects each block onto a `Q`-point DFT whose bins `k * M` sit
//! on the modulation frequencies.

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    Ofdm,
    FbmcQam,
    FbmcOqam,
    Scm,
    TfsQam,
    TfsOqam,
}

impl Scheme {
    pub fn is_oqam(self) -> bool {
        matches!(self, Scheme::FbmcOqam | Scheme::TfsOqam)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ofdm => "OFDM",
            Scheme::FbmcQam => "FBMC_QAM",
            Scheme::FbmcOqam => "FBMC_OQAM",
            Scheme::Scm => "SCM",
            Scheme::TfsQam => "TFS_QAM",
            Scheme::TfsOqam => "TFS_OQAM",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "OFDM" => Ok(Scheme::Ofdm),
            "FBMC_QAM" => Ok(Scheme::FbmcQam),
            "FBMC_OQAM" => Ok(Scheme::FbmcOqam),
            "SCM" => Ok(Scheme::Scm),
            "TFS_QAM" => Ok(Scheme::TfsQam),
            "TFS_OQAM" => Ok(Scheme::TfsOqam),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub scheme: Scheme,
    /// N
    pub subcarriers: usize,
    pub delta_t: f64,
    pub delta_f: f64,
    /// N_s
    pub samples_per_symbol: usize,
    /// M, spacing of modulation frequencies in DFT bins
    pub grid_divisor: usize,
    /// Q, DFT size of the receive projection
    pub dft_len: usize,
    /// G; the packet spans 2G+1 symbol slots
    pub half_len: usize,
    /// Cyclic prefix: symbols for SCM, samples for OFDM.
    pub cp_len: usize,
    pub constellation_order: usize,
    /// P
    pub power: f64,
    /// T_s in seconds
    pub symbol_period: f64,
    /// zeta_g
    pub guard_efficiency: f64,
    /// First sample of the receive DFT window relative to the block start.
    #[serde(default)]
    pub rx_offset: usize,
    #[serde(default = "default_max_frame")]
    pub max_frame_samples: usize,
}

fn default_max_frame() -> usize {
    1 << 24
}

/// Outcome of one named constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub constraint: String,
    pub passed: bool,
    pub detail: String,
}

impl ConstraintCheck {
    fn new(constraint: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { constraint: constraint.into(), passed, detail: detail.into() }
    }
}

impl FrameConfig {
    pub fn density(&self) -> f64 {
        self.delta_t * self.delta_f
    }

    pub fn slots(&self) -> usize {
        2 * self.half_len + 1
    }

    /// Columns carrying fresh data (SCM loses `cp_len` slots to the prefix).
    pub fn data_slots(&self) -> usize {
        match self.scheme {
            Scheme::Scm => self.slots().saturating_sub(self.cp_len),
            _ => self.slots(),
        }
    }

    /// T_c in seconds.
    pub fn sample_period(&self) -> f64 {
        self.symbol_period / self.samples_per_symbol as f64
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.sample_period()
    }

    /// T = T_s / delta_t in seconds.
    pub fn reference_period(&self) -> f64 {
        self.symbol_period / self.delta_t
    }

    /// Subcarrier spacing delta_f / T in Hz.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.delta_f / self.reference_period()
    }

    /// Modulation frequency step in cycles per sample, delta_f delta_t / N_s.
    pub fn frequency_step(&self) -> f64 {
        self.density() / self.samples_per_symbol as f64
    }

    /// Per-dimension alphabet: M-QAM, or sqrt(M)-PAM for offset-QAM schemes.
    pub fn constellation(&self) -> Result<Constellation> {
        if self.scheme.is_oqam() {
            Constellation::oqam_pam(self.constellation_order)
        } else {
            Constellation::qam(self.constellation_order)
        }
    }

    pub fn bits_per_frame(&self) -> Result<usize> {
        Ok(self.subcarriers * self.data_slots() * self.constellation()?.bits_per_symbol())
    }

    pub fn frame_samples(&self, pulse_len: usize) -> usize {
        self.slots() * self.samples_per_symbol + pulse_len.saturating_sub(self.samples_per_symbol)
    }

    /// Evaluate every structural and per-scheme constraint.
    pub fn checks(&self) -> Vec<ConstraintCheck> {
        let mut out = Vec::new();
        let dd = self.density();
        out.push(ConstraintCheck::new(
            "N >= 1, N_s >= 1, M >= 1, Q >= 1",
            self.subcarriers >= 1 && self.samples_per_symbol >= 1 && self.grid_divisor >= 1 && self.dft_len >= 1,
            format!(
                "N={}, N_s={}, M={}, Q={}",
                self.subcarriers, self.samples_per_symbol, self.grid_divisor, self.dft_len
            ),
        ));
        out.push(ConstraintCheck::new(
            "delta_t > 0, delta_f > 0, T_s > 0, P > 0",
            self.delta_t > 0.0 && self.delta_f > 0.0 && self.symbol_period > 0.0 && self.power > 0.0,
            format!(
                "delta_t={}, delta_f={}, T_s={}, P={}",
                self.delta_t, self.delta_f, self.symbol_period, self.power
            ),
        ));
        let lhs = self.dft_len as f64 * dd;
        let rhs = (self.grid_divisor * self.samples_per_symbol) as f64;
        out.push(ConstraintCheck::new(
            "Q * delta_f * delta_t = M * N_s",
            (lhs - rhs).abs() <= TOL * rhs.max(1.0),
            format!(
                "Q*delta_f*delta_t = {}*{}*{} = {lhs}, M*N_s = {}*{} = {rhs}",
                self.dft_len, self.delta_f, self.delta_t, self.grid_divisor, self.samples_per_symbol
            ),
        ));
        let top_bin = (self.subcarriers.saturating_sub(1)) * self.grid_divisor;
        out.push(ConstraintCheck::new(
            "(N-1) * M < Q",
            top_bin < self.dft_len,
            format!("highest subcarrier bin {top_bin}, Q={}", self.dft_len),
        ));
        out.push(ConstraintCheck::new(
            "0 < zeta_g <= 1",
            self.guard_efficiency > 0.0 && self.guard_efficiency <= 1.0,
            format!("zeta_g={}", self.guard_efficiency),
        ));
        let cons = self.constellation();
        out.push(ConstraintCheck::new(
            "constellation order valid for scheme",
            cons.is_ok(),
            match &cons {
                Ok(c) => format!("M={} -> {} bits per symbol", self.constellation_order, c.bits_per_symbol()),
                Err(e) => e.to_string(),
            },
        ));
        let multicarrier = |out: &mut Vec<ConstraintCheck>| {
            out.push(ConstraintCheck::new(
                "N > 1",
                self.subcarriers > 1,
                format!("N={}", self.subcarriers),
            ));
        };
        match self.scheme {
            Scheme::FbmcQam => {
                multicarrier(&mut out);
                out.push(ConstraintCheck::new("delta_t*delta_f >= 1", dd >= 1.0 - TOL, format!("delta_t*delta_f={dd}")));
            }
            Scheme::FbmcOqam => {
                multicarrier(&mut out);
                out.push(ConstraintCheck::new("delta_t*delta_f >= 0.5", dd >= 0.5 - TOL, format!("delta_t*delta_f={dd}")));
            }
            Scheme::TfsQam => {
                multicarrier(&mut out);
                out.push(ConstraintCheck::new("delta_t*delta_f < 1", dd < 1.0 - TOL, format!("delta_t*delta_f={dd}")));
            }
            Scheme::TfsOqam => {
                multicarrier(&mut out);
                out.push(ConstraintCheck::new("delta_t*delta_f < 0.5", dd < 0.5 - TOL, format!("delta_t*delta_f={dd}")));
            }
            Scheme::Scm => {
                out.push(ConstraintCheck::new("N = 1", self.subcarriers == 1, format!("N={}", self.subcarriers)));
                out.push(ConstraintCheck::new("delta_t*delta_f >= 1", dd >= 1.0 - TOL, format!("delta_t*delta_f={dd}")));
                out.push(ConstraintCheck::new(
                    "G_cp < 2G+1",
                    self.cp_len < self.slots(),
                    format!("G_cp={}, 2G+1={}", self.cp_len, self.slots()),
                ));
            }
            Scheme::Ofdm => {
                out.push(ConstraintCheck::new("delta_f = 1", (self.delta_f - 1.0).abs() <= TOL, format!("delta_f={}", self.delta_f)));
                let useful = self.samples_per_symbol as f64 - self.cp_len as f64;
                let expected = if useful > 0.0 { self.samples_per_symbol as f64 / useful } else { f64::INFINITY };
                out.push(ConstraintCheck::new(
                    "delta_t = 1 + T_cp/T",
                    (self.delta_t - expected).abs() <= TOL * expected,
                    format!("delta_t={}, 1 + T_cp/T = {expected}", self.delta_t),
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.checks().into_iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::Constraint { constraint: c.constraint, detail: c.detail }),
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn base(scheme: Scheme) -> FrameConfig {
        FrameConfig {
            scheme,
            subcarriers: 8,
            delta_t: 1.0,
            delta_f: 1.0,
            samples_per_symbol: 16,
            grid_divisor: 2,
            dft_len: 32,
            half_len: 2,
            cp_len: 0,
            constellation_order: 4,
            power: 1.0,
            symbol_period: 16.0e-6,
            guard_efficiency: 1.0,
            rx_offset: 0,
            max_frame_samples: 1 << 20,
        }
    }

    pub fn ofdm(n: usize, cp: usize) -> FrameConfig {
        FrameConfig {
            scheme: Scheme::Ofdm,
            subcarriers: n,
            delta_t: (n + cp) as f64 / n as f64,
            delta_f: 1.0,
            samples_per_symbol: n + cp,
            grid_divisor: 1,
            dft_len: n,
            half_len: 2,
            cp_len: cp,
            constellation_order: 4,
            power: 1.0,
            symbol_period: (n + cp) as f64 * 1e-6,
            guard_efficiency: 1.0,
            rx_offset: cp,
            max_frame_samples: 1 << 20,
        }
    }

    pub fn oqam(n: usize, t_samples: usize, overlap: usize) -> FrameConfig {
        FrameConfig {
            scheme: Scheme::FbmcOqam,
            subcarriers: n,
            delta_t: 0.5,
            delta_f: 1.0,
            samples_per_symbol: t_samples / 2,
            grid_divisor: overlap,
            dft_len: overlap * t_samples,
            half_len: 3,
            cp_len: 0,
            constellation_order: 4,
            power: 1.0,
            symbol_period: t_samples as f64 * 0.5e-6,
            guard_efficiency: 1.0,
            rx_offset: 0,
            max_frame_samples: 1 << 20,
        }
    }
}
