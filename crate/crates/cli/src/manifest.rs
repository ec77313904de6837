//! Run manifest schema.
//!
//! A manifest holds any number of `[[scenario]]` link sweeps and `[[mimo]]`
//! uplink sweeps. Every entry becomes one CSV file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use mcwave::ase::LinkScenario;
use mcwave::channel::{ChannelProfile, ETU_DELAYS_NS, ETU_POWERS_DB};
use mcwave::config::{ConstraintCheck, FrameConfig};
use mcwave::mimo::{UplinkEqualizer, UplinkInputs, UplinkScenario};
use mcwave::presets::{preset_bandwidth, preset_frame, Preset, DEFAULT_EVM};
use mcwave::pulse::{make_pulse, make_pulse_with_period, PulseKind};
use mcwave::receiver::EqualizerKind;

use crate::CliError;

/// Sample rate of the synthetic uplink channels.
pub const UPLINK_SAMPLE_RATE_HZ: f64 = 19.2e6;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Default seed for entries without their own.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default, rename = "mimo")]
    pub mimo: Vec<MimoSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    Finite,
    Gaussian,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub n_channels: usize,
    /// symbols per channel realization
    pub n_symbols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    #[default]
    Etu,
    Flat,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub profile: ProfileName,
    #[serde(default)]
    pub doppler_hz: f64,
    #[serde(default = "yes")]
    pub fading: bool,
    pub delays_ns: Option<Vec<f64>>,
    pub powers_db: Option<Vec<f64>>,
}

fn yes() -> bool {
    true
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self { profile: ProfileName::Etu, doppler_hz: 0.0, fading: true, delays_ns: None, powers_db: None }
    }
}

impl ChannelSpec {
    pub fn build(&self, sample_period: f64) -> Result<ChannelProfile, CliError> {
        let p = match self.profile {
            ProfileName::Etu => ChannelProfile::from_db(&ETU_DELAYS_NS, &ETU_POWERS_DB, self.doppler_hz, sample_period),
            ProfileName::Flat => Ok(ChannelProfile::flat(self.doppler_hz, sample_period)),
            ProfileName::Custom => match (&self.delays_ns, &self.powers_db) {
                (Some(d), Some(p)) => ChannelProfile::from_db(d, p, self.doppler_hz, sample_period),
                _ => return Err(CliError::Validation("custom channel profile needs `delays_ns` and `powers_db`".into())),
            },
        }
        .map_err(CliError::Runtime)?;
        Ok(if self.fading { p } else { p.without_fading() })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub kind: PulseKind,
    #[serde(default)]
    pub rolloff: f64,
    /// pulse length in samples, defaults to the DFT size
    pub length: Option<usize>,
    /// T in samples, defaults to `Q / M`
    pub period_samples: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub preset: Option<Preset>,
    pub frame: Option<FrameConfig>,
    pub pulse: Option<PulseSpec>,
    /// constellation order, overrides the frame's
    pub constellation: Option<usize>,
    /// G for presets
    pub half_len: Option<usize>,
    #[serde(default)]
    pub channel: ChannelSpec,
    pub equalizer: Option<EqualizerKind>,
    pub evm_fraction: Option<f64>,
    pub snr_grid: Vec<f64>,
    #[serde(default)]
    pub inputs: InputKind,
    pub monte_carlo: MonteCarlo,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub total_bandwidth_hz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MimoSpec {
    pub name: String,
    pub users: usize,
    pub antennas: Vec<usize>,
    #[serde(default = "unit_delta")]
    pub delta_t: Vec<f64>,
    #[serde(default = "mimo_rolloff")]
    pub rolloff: f64,
    /// T in samples
    #[serde(default = "mimo_period")]
    pub period_samples: usize,
    /// pulse support in symbol periods
    #[serde(default = "mimo_span")]
    pub pulse_periods: usize,
    pub constellation: Option<usize>,
    #[serde(default)]
    pub inputs: InputKind,
    #[serde(default = "one_tap")]
    pub equalizer: UplinkEqualizer,
    #[serde(default)]
    pub awgn_reference: bool,
    #[serde(default)]
    pub sinc_benchmark: bool,
    #[serde(default = "sinc_span")]
    pub sinc_periods: usize,
    #[serde(default)]
    pub channel: ChannelSpec,
    pub snr_grid: Vec<f64>,
    pub monte_carlo: MonteCarlo,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

fn unit_delta() -> Vec<f64> {
    vec![1.0]
}
fn mimo_rolloff() -> f64 {
    0.2
}
fn mimo_period() -> usize {
    10
}
fn mimo_span() -> usize {
    20
}
fn sinc_span() -> usize {
    64
}
fn one_tap() -> UplinkEqualizer {
    UplinkEqualizer::OneTap
}

/// One uplink curve of a `[[mimo]]` entry.
#[derive(Debug, Clone)]
pub struct UplinkCurve {
    pub id: String,
    pub scenario: UplinkScenario,
    pub remove_interference: bool,
}

pub fn parse_manifest(text: &str) -> Result<Manifest, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_manifest(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Manifest {
    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty() && self.mimo.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.scenarios.iter().map(|s| s.name.as_str()).chain(self.mimo.iter().map(|m| m.name.as_str()))
    }
}

impl ScenarioSpec {
    pub fn seed(&self, default: u64) -> u64 {
        self.seed.unwrap_or(default)
    }

    pub fn output_file(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)))
    }

    fn frame_and_pulse(&self) -> Result<(FrameConfig, mcwave::pulse::PrototypePulse), CliError> {
        match (&self.preset, &self.frame) {
            (Some(_), Some(_)) => Err(CliError::Validation(format!("scenario `{}`: give either `preset` or `frame`, not both", self.name))),
            (None, None) => Err(CliError::Validation(format!("scenario `{}`: missing `preset` or `frame`", self.name))),
            (Some(p), None) => {
                let order = self.constellation.unwrap_or(4);
                preset_frame(*p, order, self.half_len.unwrap_or(16)).map_err(CliError::Runtime)
            }
            (None, Some(f)) => {
                let mut f = f.clone();
                if let Some(m) = self.constellation {
                    f.constellation_order = m;
                }
                let spec = self
                    .pulse
                    .as_ref()
                    .ok_or_else(|| CliError::Validation(format!("scenario `{}`: a `frame` needs a `pulse` table", self.name)))?;
                let len = spec.length.unwrap_or(f.dft_len);
                let pulse = match spec.period_samples {
                    Some(t) => make_pulse_with_period(spec.kind, len, t, spec.rolloff, f.grid_divisor),
                    None => make_pulse(spec.kind, len, f.grid_divisor, spec.rolloff),
                }
                .map_err(CliError::Runtime)?;
                Ok((f, pulse))
            }
        }
    }

    /// Frame checks only, for reporting; empty when the frame cannot be built.
    pub fn frame_checks(&self) -> Vec<ConstraintCheck> {
        match &self.frame {
            Some(f) => f.checks(),
            None => match self.frame_and_pulse() {
                Ok((f, _)) => f.checks(),
                Err(_) => Vec::new(),
            },
        }
    }

    pub fn build(&self) -> Result<LinkScenario, CliError> {
        let (frame, pulse) = self.frame_and_pulse()?;
        let profile = self.channel.build(frame.sample_period())?;
        let equalizer = self.equalizer.unwrap_or(match self.preset {
            Some(p) => p.default_equalizer(),
            None if frame.scheme.is_oqam() => EqualizerKind::OqamMfMmse,
            None => EqualizerKind::Mmse,
        });
        let mut sc = LinkScenario::new(self.name.clone(), frame, pulse, profile, equalizer);
        sc.evm = self.evm_fraction.unwrap_or(if self.preset.is_some() { DEFAULT_EVM } else { 0.0 });
        sc.total_bandwidth = self.total_bandwidth_hz.or(self.preset.map(|p| preset_bandwidth(p, &sc.frame)));
        Ok(sc)
    }
}

impl MimoSpec {
    pub fn seed(&self, default: u64) -> u64 {
        self.seed.unwrap_or(default)
    }

    pub fn output_file(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)))
    }

    fn inputs(&self) -> Result<UplinkInputs, CliError> {
        match (self.inputs, self.constellation) {
            (InputKind::Gaussian, _) => Ok(UplinkInputs::Gaussian),
            (InputKind::Finite, Some(m)) => Ok(UplinkInputs::Qam(m)),
            (InputKind::Finite, None) => Err(CliError::Validation(format!("mimo `{}`: finite inputs need `constellation`", self.name))),
        }
    }

    fn scenario(&self, id: String, antennas: usize, delta_t: f64, kind: PulseKind, periods: usize, rolloff: f64) -> Result<UplinkScenario, CliError> {
        let t = self.period_samples;
        let pulse = make_pulse(kind, periods * t, periods, rolloff).map_err(CliError::Runtime)?;
        Ok(UplinkScenario {
            id,
            users: self.users,
            antennas,
            pulse,
            period: t,
            delta_t,
            inputs: self.inputs()?,
            power: 1.0,
            profile: self.channel.build(1.0 / UPLINK_SAMPLE_RATE_HZ)?,
        })
    }

    /// All curves of this entry in output order.
    pub fn curves(&self) -> Result<Vec<UplinkCurve>, CliError> {
        if self.antennas.is_empty() || self.delta_t.is_empty() {
            return Err(CliError::Validation(format!("mimo `{}`: `antennas` and `delta_t` must not be empty", self.name)));
        }
        let mut out = Vec::new();
        for &n in &self.antennas {
            for &dt in &self.delta_t {
                let id = format!("{}-n{n}-dt{dt}", self.name);
                let sc = self.scenario(id.clone(), n, dt, PulseKind::Rrc, self.pulse_periods, self.rolloff)?;
                if self.awgn_reference {
                    out.push(UplinkCurve { id: format!("{id}-awgn"), scenario: sc.clone(), remove_interference: true });
                }
                out.push(UplinkCurve { id, scenario: sc, remove_interference: false });
            }
            if self.sinc_benchmark {
                let id = format!("{}-n{n}-sinc", self.name);
                let sc = self.scenario(id.clone(), n, 1.0, PulseKind::SincTrunc, self.sinc_periods, 0.0)?;
                out.push(UplinkCurve { id, scenario: sc, remove_interference: false });
            }
        }
        Ok(out)
    }
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub entry: String,
    pub check: ConstraintCheck,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub lines: Vec<CheckLine>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.check.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| !l.check.passed)
    }

    fn push(&mut self, entry: &str, constraint: &str, passed: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine {
            entry: entry.to_string(),
            check: ConstraintCheck { constraint: constraint.to_string(), passed, detail: detail.into() },
        });
    }

    fn push_result<T>(&mut self, entry: &str, constraint: &str, r: Result<T, CliError>) -> Option<T> {
        match r {
            Ok(v) => {
                self.push(entry, constraint, true, "");
                Some(v)
            }
            Err(e) => {
                self.push(entry, constraint, false, e.to_string());
                None
            }
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let tag = if l.check.passed { "ok  " } else { "FAIL" };
            s.push_str(&format!("[{tag}] {}: {}", l.entry, l.check.constraint));
            if !l.check.detail.is_empty() {
                s.push_str(&format!("  ({})", l.check.detail));
            }
            s.push('\n');
        }
        s
    }
}

fn grid_ok(grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Validation("empty SNR grid".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Validation(format!("SNR grid {grid:?} must be finite and strictly increasing")));
    }
    Ok(())
}

fn monte_carlo_ok(mc: &MonteCarlo) -> Result<(), CliError> {
    if mc.n_channels == 0 || mc.n_symbols == 0 {
        return Err(CliError::Validation(format!("{} channels x {} symbols", mc.n_channels, mc.n_symbols)));
    }
    Ok(())
}

/// Check every entry, listing each constraint with its status.
pub fn validate_manifest(m: &Manifest) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let mut seen = HashSet::new();
    for name in m.names() {
        let fresh = seen.insert(name.to_string());
        rep.push(name, "unique name", fresh, if fresh { String::new() } else { format!("`{name}` appears more than once") });
    }
    for s in &m.scenarios {
        let name = s.name.as_str();
        for c in s.frame_checks() {
            rep.lines.push(CheckLine { entry: name.to_string(), check: c });
        }
        rep.push_result(name, "snr_grid", grid_ok(&s.snr_grid));
        rep.push_result(name, "monte_carlo", monte_carlo_ok(&s.monte_carlo));
        if let Some(sc) = rep.push_result(name, "scenario builds", s.build()) {
            rep.push_result(name, "link components validate", sc.validate().map_err(CliError::Runtime));
        }
    }
    for mm in &m.mimo {
        let name = mm.name.as_str();
        rep.push_result(name, "snr_grid", grid_ok(&mm.snr_grid));
        rep.push_result(name, "monte_carlo", monte_carlo_ok(&mm.monte_carlo));
        let fullisi_ok = match (mm.equalizer, mm.inputs) {
            (UplinkEqualizer::FullIsi, InputKind::Finite) => Err(CliError::Validation("FULL_ISI is evaluated with Gaussian inputs".into())),
            _ => Ok(()),
        };
        rep.push_result(name, "equalizer matches inputs", fullisi_ok);
        if let Some(curves) = rep.push_result(name, "scenario builds", mm.curves()) {
            for c in curves {
                let step = c.scenario.symbol_step().map(|_| ()).map_err(CliError::Runtime);
                rep.push_result(&c.id, "delta_t*T is a whole number of samples", step);
                rep.push_result(&c.id, "uplink components validate", c.scenario.validate().map_err(CliError::Runtime));
            }
        }
    }
    rep
}
