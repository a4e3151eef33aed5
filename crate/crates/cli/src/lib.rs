//! Command-line driver for the Flip-KLJN simulator.
//!
//! Exit codes: 0 success, 2 usage, 3 unreadable or malformed config file,
//! 4 invalid parameters, 5 output I/O failure.

pub mod args;
pub mod cache;
pub mod config;
pub mod presets;
pub mod report;
pub mod settings;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use flipkljn_core::analytics::{bep_breakdown, exact_bep_breakdown, AnalyticInputs};
use flipkljn_core::harness::{resolve_optimal_thresholds, run_trials, ExperimentConfig};
use flipkljn_core::noise::{ChannelConfigs, NoiseEnvironment};
use flipkljn_core::optimizer::{optimize_voltage_thresholds, Objective, OptimizationProblem};
use flipkljn_core::protocol::{DetectorKind, ProtocolConfig, ThresholdSet};
use thiserror::Error;

use args::{Cli, Command};
use cache::{CacheEntry, ThresholdCache};
use presets::GridPoint;
use report::{render, report_row, Value, COLUMNS};
use settings::{Format, Settings, SEED_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Invalid(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<flipkljn_core::Error> for CliError {
    fn from(e: flipkljn_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

/// Run the CLI on `argv` (program name first) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("flipkljn: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let a = cli.command.args();
    let file = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            config::parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => config::ConfigMap::new(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let mut s = Settings::resolve(&file, &a.overrides(), env_seed.as_deref())?;
    let mut cache = open_cache(&s, a.out.as_deref());

    let table = match &cli.command {
        Command::Analytic(_) => analytic(&s)?,
        Command::Optimize(_) => optimize(&s, &mut cache)?,
        Command::Simulate(_) => {
            let point = GridPoint {
                scheme: s.scheme,
                detector: s.detector,
                alpha: s.alpha,
                samples: s.samples,
                snr_v: s.snr_v,
                snr_i: s.snr_i,
            };
            let t = thresholds_for(&s, &point, &mut cache)?;
            (s.beta, s.kappa, s.eta, s.xi) = (Some(t.beta), Some(t.kappa), Some(t.eta), Some(t.xi));
            let row = simulate_point(&s, &point, t)?;
            render(&COLUMNS, &[row], s.format)
        }
        Command::Figure(_) => {
            let preset = s
                .preset
                .ok_or_else(|| CliError::Invalid("figure needs --preset (fig4, fig5, fig6, fig8)".into()))?;
            let mut rows = Vec::new();
            for point in presets::grid(preset, &s) {
                let t = thresholds_for(&s, &point, &mut cache)?;
                rows.push(simulate_point(&s, &point, t)?);
            }
            render(&COLUMNS, &rows, s.format)
        }
    };
    write_output(a.out.as_deref(), &table, &s)
}

fn open_cache(s: &Settings, out: Option<&Path>) -> Option<ThresholdCache> {
    if s.no_cache {
        return None;
    }
    let path = s.cache.clone().unwrap_or_else(|| {
        let dir = out.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
        dir.join(cache::FILE_NAME)
    });
    let (c, warning) = ThresholdCache::open(&path);
    if let Some(w) = warning {
        eprintln!("flipkljn: warning: {w}");
    }
    Some(c)
}

fn environment(s: &Settings, alpha: f64) -> Result<NoiseEnvironment, CliError> {
    Ok(NoiseEnvironment::new(s.k, s.temperature, s.bandwidth, s.r_low, alpha)?)
}

fn pair(lower: Option<f64>, upper: Option<f64>, names: &str) -> Result<Option<(f64, f64)>, CliError> {
    match (lower, upper) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => Err(CliError::Invalid(format!("{names} must be given together"))),
    }
}

/// Explicit thresholds when set, otherwise the cached or freshly optimised
/// ones for the point.
fn thresholds_for(
    s: &Settings,
    p: &GridPoint,
    cache: &mut Option<ThresholdCache>,
) -> Result<ThresholdSet, CliError> {
    if !(p.alpha.is_finite() && p.alpha > 1.0) {
        return Err(CliError::Invalid(format!("alpha = R_H/R_L must satisfy alpha > 1, got {}", p.alpha)));
    }
    if p.samples == 0 {
        return Err(CliError::Invalid("samples N must be at least 1".into()));
    }
    let voltage = pair(s.beta, s.kappa, "beta and kappa")?;
    let current = pair(s.eta, s.xi, "eta and xi")?;
    if let Some((b, k)) = voltage {
        let (e, x) = current.unwrap_or((b, k));
        return Ok(ThresholdSet::new(b, k, e, x));
    }
    if current.is_some() {
        return Err(CliError::Invalid("eta and xi need beta and kappa as well".into()));
    }
    if let Some(hit) = cache.as_ref().and_then(|c| c.lookup(p.alpha, p.samples, p.detector)) {
        return Ok(hit.thresholds);
    }
    let t = resolve_optimal_thresholds(p.alpha, p.samples, p.detector)?;
    if let Some(c) = cache.as_mut() {
        let objective = analytic_pb(p.alpha, p.samples, t.beta, t.kappa)?;
        let entry = CacheEntry {
            alpha: p.alpha,
            n: p.samples,
            detector: p.detector,
            thresholds: t,
            objective,
        };
        c.insert(entry)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", c.path().display())))?;
    }
    Ok(t)
}

fn analytic_pb(alpha: f64, n: usize, beta: f64, kappa: f64) -> Result<f64, CliError> {
    Ok(bep_breakdown(&AnalyticInputs::new(alpha, beta, kappa, n)?)?.p_b)
}

fn simulate_point(s: &Settings, p: &GridPoint, t: ThresholdSet) -> Result<Vec<Value>, CliError> {
    let env = environment(s, p.alpha)?;
    let mut protocol = ProtocolConfig::new(p.scheme, p.detector, t, p.samples);
    protocol.channels = ChannelConfigs {
        voltage: p.snr_v,
        current: p.snr_i,
    };
    protocol.estimates = s.estimates;
    protocol.flip_on_flagged = s.flip_on_flagged;
    let mut cfg = ExperimentConfig::new(env, protocol, s.exchanges, s.seed);
    cfg.eve = s.eve;
    cfg.shard_len = s.shard_len;
    cfg.workers = s.workers;
    let report = run_trials(&cfg)?;
    Ok(report_row(&report))
}

const ANALYTIC_COLUMNS: [&str; 16] = [
    "alpha", "N", "beta", "kappa", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "P_mm", "P_bm", "P_b",
    "P_b_exact",
];

fn analytic(s: &Settings) -> Result<String, CliError> {
    environment(s, s.alpha)?;
    let (beta, kappa) = match pair(s.beta, s.kappa, "beta and kappa")? {
        Some(p) => p,
        None => {
            let r = optimize_voltage_thresholds(&OptimizationProblem::new(s.alpha, s.samples, Objective::AnalyticPb))?;
            (r.lower, r.upper)
        }
    };
    let inputs = AnalyticInputs::new(s.alpha, beta, kappa, s.samples)?;
    let b = bep_breakdown(&inputs)?;
    let exact = exact_bep_breakdown(&inputs)?;
    let mut row = vec![
        Value::Float(s.alpha),
        Value::Int(s.samples as u64),
        Value::Float(beta),
        Value::Float(kappa),
    ];
    row.extend(b.p.iter().map(|&p| Value::Float(p)));
    row.extend([Value::Float(b.p_mm), Value::Float(b.p_bm), Value::Float(b.p_b), Value::Float(exact.p_b)]);
    Ok(render(&ANALYTIC_COLUMNS, &[row], s.format))
}

const OPTIMIZE_COLUMNS: [&str; 8] = ["alpha", "N", "detector", "beta", "kappa", "eta", "xi", "objective"];

fn optimize(s: &Settings, cache: &mut Option<ThresholdCache>) -> Result<String, CliError> {
    environment(s, s.alpha)?;
    let point = GridPoint {
        scheme: s.scheme,
        detector: s.detector,
        alpha: s.alpha,
        samples: s.samples,
        snr_v: s.snr_v,
        snr_i: s.snr_i,
    };
    let free = Settings {
        beta: None,
        kappa: None,
        eta: None,
        xi: None,
        ..s.clone()
    };
    let t = thresholds_for(&free, &point, cache)?;
    let entry = CacheEntry {
        alpha: s.alpha,
        n: s.samples,
        detector: s.detector,
        thresholds: t,
        objective: analytic_pb(s.alpha, s.samples, t.beta, t.kappa)?,
    };
    // CSV output is a valid cache file, so it can seed another cache.
    if s.format == Format::Csv {
        return Ok(format!("{}\n{}\n", cache::HEADER, entry.to_line()));
    }
    let row = vec![
        Value::Float(entry.alpha),
        Value::Int(entry.n as u64),
        Value::Str(args::detector_name(entry.detector).into()),
        Value::Float(t.beta),
        Value::Float(t.kappa),
        Value::Float(t.eta),
        Value::Float(t.xi),
        Value::Float(entry.objective),
    ];
    Ok(render(&OPTIMIZE_COLUMNS, &[row], s.format))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".config");
    PathBuf::from(name)
}

fn write_output(out: Option<&Path>, table: &str, s: &Settings) -> Result<(), CliError> {
    match out {
        None => {
            print!("{table}");
            Ok(())
        }
        Some(path) => {
            let io = |p: &Path, e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", p.display()));
            fs::write(path, table).map_err(|e| io(path, e))?;
            let side = sidecar_path(path);
            fs::write(&side, s.echo()).map_err(|e| io(&side, e))
        }
    }
}

/// Detector names accepted on the command line, for help texts and tests.
pub fn detector_names() -> [&'static str; 4] {
    [DetectorKind::VoltageOnly, DetectorKind::CurrentOnly, DetectorKind::Jvcd, DetectorKind::Selective]
        .map(args::detector_name)
}
