//! Experiment runner: reads a manifest, sweeps every entry and writes one CSV
//! per entry plus a `run_summary.toml`.

pub mod manifest;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use mcwave::ase::{estimate_ase, estimate_ase_gaussian_inputs, AseCurve};
use mcwave::mimo::{average_users, uplink_ase, UplinkOptions};

pub use manifest::{load_manifest, parse_manifest, validate_manifest, Manifest, ValidationReport};
use manifest::{InputKind, MimoSpec, ScenarioSpec};

pub const SUMMARY_FILE: &str = "run_summary.toml";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(#[from] mcwave::Error),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntrySummary {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub output: String,
    pub config_hash: String,
    pub points: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub tool: String,
    pub version: String,
    pub manifest: String,
    pub jobs: usize,
    pub wall_seconds: f64,
    pub entries: Vec<EntrySummary>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_curves(path: &Path, curves: &[AseCurve]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for (i, c) in curves.iter().enumerate() {
        c.write_csv(&mut w, i == 0)?;
    }
    Ok(())
}

fn run_link(s: &ScenarioSpec, seed: u64, out: &Path) -> Result<EntrySummary, CliError> {
    let t0 = Instant::now();
    let sc = s.build()?;
    let mc = s.monte_carlo;
    let curve = match s.inputs {
        InputKind::Finite => estimate_ase(&sc, &s.snr_grid, mc.n_channels, mc.n_symbols, seed)?,
        InputKind::Gaussian => estimate_ase_gaussian_inputs(&sc, &s.snr_grid, mc.n_channels, mc.n_symbols, seed)?,
    };
    let path = out.join(s.output_file());
    write_curves(&path, std::slice::from_ref(&curve))?;
    Ok(EntrySummary {
        name: s.name.clone(),
        kind: "link".into(),
        seed,
        output: path.display().to_string(),
        config_hash: curve.meta.config_hash.clone(),
        points: curve.points.len(),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Curves of one uplink entry, each averaged over users.
pub fn mimo_curves(m: &MimoSpec, seed: u64) -> Result<Vec<AseCurve>, CliError> {
    m.curves()?
        .into_iter()
        .map(|c| {
            let mut opt = UplinkOptions::new(m.equalizer, m.monte_carlo.n_channels, m.monte_carlo.n_symbols);
            opt.remove_interference = c.remove_interference;
            let per_user = uplink_ase(&c.scenario, &m.snr_grid, &opt, seed)?;
            Ok(average_users(&per_user, &c.id)?)
        })
        .collect()
}

fn run_mimo(m: &MimoSpec, seed: u64, out: &Path) -> Result<EntrySummary, CliError> {
    let t0 = Instant::now();
    let curves = mimo_curves(m, seed)?;
    let path = out.join(m.output_file());
    write_curves(&path, &curves)?;
    Ok(EntrySummary {
        name: m.name.clone(),
        kind: "mimo".into(),
        seed,
        output: path.display().to_string(),
        config_hash: mcwave::ase::stable_hash(&curves.iter().map(|c| c.meta.config_hash.as_str()).collect::<Vec<_>>().join(",")),
        points: curves.iter().map(|c| c.points.len()).sum(),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Run an already loaded manifest. Returns `None` when there is nothing to run.
pub fn run_manifest(m: &Manifest, manifest_name: &str, opt: &RunOptions) -> Result<Option<RunSummary>, CliError> {
    let report = validate_manifest(m);
    if !report.passed() {
        let msg: Vec<String> = report
            .failures()
            .map(|l| format!("{}: `{}` {}", l.entry, l.check.constraint, l.check.detail))
            .collect();
        return Err(CliError::Validation(msg.join("; ")));
    }
    if m.is_empty() {
        return Ok(None);
    }
    let t0 = Instant::now();
    std::fs::create_dir_all(&opt.out_dir).map_err(|e| io_err(&opt.out_dir, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opt.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let jobs = pool.current_num_threads();
    let entries: Vec<EntrySummary> = pool.install(|| {
        let links = m.scenarios.par_iter().map(|s| run_link(s, opt.seed.unwrap_or(s.seed(m.seed)), &opt.out_dir));
        let uplinks = m.mimo.par_iter().map(|u| run_mimo(u, opt.seed.unwrap_or(u.seed(m.seed)), &opt.out_dir));
        links.chain(uplinks).collect::<Result<Vec<_>, CliError>>()
    })?;
    let summary = RunSummary {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        manifest: manifest_name.to_string(),
        jobs,
        wall_seconds: t0.elapsed().as_secs_f64(),
        entries,
    };
    let text = toml::to_string(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    let path = opt.out_dir.join(SUMMARY_FILE);
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(Some(summary))
}

pub fn run(path: &Path, opt: &RunOptions) -> Result<Option<RunSummary>, CliError> {
    let m = load_manifest(path)?;
    run_manifest(&m, &path.display().to_string(), opt)
}

pub fn validate(path: &Path) -> Result<ValidationReport, CliError> {
    Ok(validate_manifest(&load_manifest(path)?))
}
