//! Link configurations of the LTE-like comparison: N = 128 subcarriers on a
//! 15 kHz raster, 1.92 MHz reference bandwidth.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ase::LinkScenario;
use crate::channel::ChannelProfile;
use crate::config::{FrameConfig, Scheme};
use crate::error::{Error, Result};
use crate::pulse::{make_pulse, make_pulse_with_period, PrototypePulse, PulseKind};
use crate::receiver::EqualizerKind;

pub const SUBCARRIER_SPACING_HZ: f64 = 15e3;
pub const LTE_SUBCARRIERS: usize = 128;
pub const LTE_CP: usize = 9;
/// Guard-tone efficiency that, with the 9-sample CP, gives a 16% loss.
pub const LTE_GUARD_EFFICIENCY: f64 = 0.9;
pub const RRC_ROLLOFF: f64 = 0.1;
pub const DEFAULT_EVM: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Ofdm,
    FbmcQam,
    FbmcOqam,
    Scm,
    TfsTime,
    TfsFrequency,
    TfsBoth,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ofdm" => Preset::Ofdm,
            "fbmc_qam" => Preset::FbmcQam,
            "fbmc_oqam" => Preset::FbmcOqam,
            "scm" => Preset::Scm,
            "tfs_time" => Preset::TfsTime,
            "tfs_frequency" => Preset::TfsFrequency,
            "tfs_both" => Preset::TfsBoth,
            other => return Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        })
    }
}

impl Preset {
    pub fn default_equalizer(self) -> EqualizerKind {
        match self {
            Preset::FbmcOqam => EqualizerKind::OqamMfMmse,
            _ => EqualizerKind::Mmse,
        }
    }
}

/// Frame layout and prototype pulse for a preset.
pub fn preset_frame(preset: Preset, order: usize, half_len: usize) -> Result<(FrameConfig, PrototypePulse)> {
    let t_ref = 1.0 / SUBCARRIER_SPACING_HZ;
    let mut cfg = FrameConfig {
        scheme: Scheme::FbmcQam,
        subcarriers: LTE_SUBCARRIERS,
        delta_t: 1.0,
        delta_f: 1.0,
        samples_per_symbol: 128,
        grid_divisor: 5,
        dft_len: 640,
        half_len,
        cp_len: 0,
        constellation_order: order,
        power: 1.0,
        symbol_period: t_ref,
        guard_efficiency: 1.0,
        rx_offset: 0,
        max_frame_samples: 1 << 24,
    };
    // (delta_t, delta_f, T in samples, N_s, Q)
    let tfs = |cfg: &mut FrameConfig, dt: f64, df: f64, t: usize, ns: usize, q: usize| -> Result<PrototypePulse> {
        cfg.scheme = Scheme::TfsQam;
        cfg.delta_t = dt;
        cfg.delta_f = df;
        cfg.samples_per_symbol = ns;
        cfg.dft_len = q;
        cfg.grid_divisor = 5;
        cfg.symbol_period = dt * t_ref;
        make_pulse_with_period(PulseKind::Phydyas, q, t as f64, 0.0, 5)
    };
    let pulse = match preset {
        Preset::Ofdm => {
            let n = LTE_SUBCARRIERS;
            cfg.scheme = Scheme::Ofdm;
            cfg.delta_t = (n + LTE_CP) as f64 / n as f64;
            cfg.samples_per_symbol = n + LTE_CP;
            cfg.grid_divisor = 1;
            cfg.dft_len = n;
            cfg.cp_len = LTE_CP;
            cfg.rx_offset = LTE_CP;
            cfg.guard_efficiency = LTE_GUARD_EFFICIENCY;
            cfg.symbol_period = cfg.delta_t * t_ref;
            make_pulse(PulseKind::Rect, n + LTE_CP, 1, 0.0)?
        }
        Preset::FbmcQam => make_pulse(PulseKind::Phydyas, 640, 5, 0.0)?,
        Preset::FbmcOqam => {
            cfg.scheme = Scheme::FbmcOqam;
            cfg.delta_t = 0.5;
            cfg.samples_per_symbol = 64;
            cfg.grid_divisor = 10;
            cfg.dft_len = 1280;
            cfg.symbol_period = 0.5 * t_ref;
            make_pulse(PulseKind::Rrc, 1280, 10, RRC_ROLLOFF)?
        }
        Preset::Scm => {
            // 137 symbols per block of which 9 are a cyclic prefix; the RRC
            // occupies (1 + rolloff)/T_s = 1.92 MHz.
            let slots = LTE_SUBCARRIERS + LTE_CP;
            cfg.scheme = Scheme::Scm;
            cfg.subcarriers = 1;
            cfg.samples_per_symbol = 128;
            cfg.grid_divisor = 10;
            cfg.dft_len = 1280;
            cfg.cp_len = LTE_CP;
            cfg.half_len = half_len.max(slots / 2);
            cfg.guard_efficiency = LTE_SUBCARRIERS as f64 / slots as f64;
            cfg.symbol_period = (1.0 + RRC_ROLLOFF) / crate::ase::REFERENCE_BANDWIDTH_HZ;
            make_pulse(PulseKind::Rrc, 1280, 10, RRC_ROLLOFF)?
        }
        Preset::TfsTime => tfs(&mut cfg, 0.9, 1.0, 130, 117, 650)?,
        Preset::TfsFrequency => tfs(&mut cfg, 1.0, 0.95, 133, 133, 700)?,
        Preset::TfsBoth => tfs(&mut cfg, 0.9, 0.95, 190, 171, 1000)?,
    };
    cfg.validate()?;
    Ok((cfg, pulse))
}

/// Occupied bandwidth used to normalize the ASE.
pub fn preset_bandwidth(preset: Preset, cfg: &FrameConfig) -> f64 {
    match preset {
        Preset::Scm => (1.0 + RRC_ROLLOFF) / cfg.symbol_period,
        _ => cfg.subcarriers as f64 * cfg.subcarrier_spacing(),
    }
}

/// Complete link over an ETU channel with the given Doppler spread.
pub fn preset_link(preset: Preset, order: usize, doppler_hz: f64, half_len: usize) -> Result<LinkScenario> {
    let (cfg, pulse) = preset_frame(preset, order, half_len)?;
    let profile = ChannelProfile::etu(doppler_hz, cfg.sample_period());
    let mut sc = LinkScenario::new(format!("{preset:?}").to_lowercase(), cfg, pulse, profile, preset.default_equalizer());
    sc.evm = DEFAULT_EVM;
    sc.total_bandwidth = Some(preset_bandwidth(preset, &sc.frame));
    Ok(sc)
}
