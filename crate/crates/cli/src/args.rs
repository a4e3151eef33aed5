//! Command-line flags and the names used for enums in flags, config files
//! and output.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use flipkljn_core::harness::EveModel;
use flipkljn_core::noise::Snr;
use flipkljn_core::protocol::{DetectorKind, EstimateMode, MapState, Scheme};

use crate::config::ConfigMap;

#[derive(Debug, Parser)]
#[command(name = "flipkljn", version, about = "Flip-KLJN and KLJN key exchange simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form error probabilities for one parameter point.
    Analytic(RunArgs),
    /// Monte Carlo run of one configuration.
    Simulate(RunArgs),
    /// Optimise thresholds for (alpha, N, detector) and store them in the cache.
    Optimize(RunArgs),
    /// Sweep a figure preset and write one row per grid point.
    Figure(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Analytic(a) | Command::Simulate(a) | Command::Optimize(a) | Command::Figure(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Read `key = value` settings from a file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout). A `<out>.config` echo is written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threshold cache file (default: thresholds.csv beside the output).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Recompute thresholds instead of reading or writing the cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long, value_parser = ["flip", "classical"])]
    pub scheme: Option<String>,
    #[arg(long, value_parser = ["voltage", "current", "jvcd", "selective"])]
    pub detector: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Samples per channel per exchange (N).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Voltage measurement SNR in dB, or `ideal`.
    #[arg(long, value_parser = check_snr)]
    pub snr_v: Option<String>,
    /// Current measurement SNR in dB, or `ideal`.
    #[arg(long, value_parser = check_snr)]
    pub snr_i: Option<String>,
    #[arg(long)]
    pub exchanges: Option<u64>,
    /// Master seed; falls back to $FLIPKLJN_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["none", "level", "assume-normal", "assume-flip", "tracking"])]
    pub eve: Option<String>,
    /// Boltzmann constant (J/K).
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub r_low: Option<f64>,
    #[arg(long, value_parser = ["csv", "jsonl"])]
    pub format: Option<String>,
    /// Exchanges per shard (at least 10000).
    #[arg(long)]
    pub shard_len: Option<u64>,
    #[arg(long, value_parser = ["sampled", "chi-square", "exact"])]
    pub estimates: Option<String>,
    /// Let flagged exchanges apply the flip rule.
    #[arg(long)]
    pub flip_on_flagged: bool,
    #[arg(long, value_parser = ["fig4", "fig5", "fig6", "fig8"])]
    pub preset: Option<String>,
    /// Comma-separated alpha list for the fig5 and fig6 presets.
    #[arg(long, value_parser = check_alphas)]
    pub alphas: Option<String>,
}

impl RunArgs {
    /// Flags given on the command line, as config assignments.
    pub fn overrides(&self) -> ConfigMap {
        let mut m = ConfigMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let s = |x: &Option<String>| x.clone();
        let f = |x: Option<f64>| x.map(|v| v.to_string());
        put("scheme", s(&self.scheme));
        put("detector", s(&self.detector));
        put("alpha", f(self.alpha));
        put("samples", self.samples.map(|v| v.to_string()));
        put("beta", f(self.beta));
        put("kappa", f(self.kappa));
        put("eta", f(self.eta));
        put("xi", f(self.xi));
        put("snr_v", s(&self.snr_v));
        put("snr_i", s(&self.snr_i));
        put("exchanges", self.exchanges.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("eve", s(&self.eve));
        put("k", f(self.k));
        put("temperature", f(self.temperature));
        put("bandwidth", f(self.bandwidth));
        put("r_low", f(self.r_low));
        put("format", s(&self.format));
        put("shard_len", self.shard_len.map(|v| v.to_string()));
        put("estimates", s(&self.estimates));
        put("flip_on_flagged", self.flip_on_flagged.then(|| "true".to_string()));
        put("preset", s(&self.preset));
        put("alphas", s(&self.alphas));
        put("workers", self.workers.map(|v| v.to_string()));
        put("cache", self.cache.as_ref().map(|p| p.display().to_string()));
        put("no_cache", self.no_cache.then(|| "true".to_string()));
        m
    }
}

fn check_snr(s: &str) -> Result<String, String> {
    parse_snr(s).map(|_| s.to_string())
}

fn check_alphas(s: &str) -> Result<String, String> {
    parse_list(s).map(|_| s.to_string())
}

pub fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "flip" => Ok(Scheme::FlipKljn),
        "classical" => Ok(Scheme::ClassicalKljn),
        _ => Err(format!("unknown scheme `{s}` (flip, classical)")),
    }
}

pub fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::FlipKljn => "flip",
        Scheme::ClassicalKljn => "classical",
    }
}

pub fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    match s {
        "voltage" => Ok(DetectorKind::VoltageOnly),
        "current" => Ok(DetectorKind::CurrentOnly),
        "jvcd" => Ok(DetectorKind::Jvcd),
        "selective" => Ok(DetectorKind::Selective),
        _ => Err(format!("unknown detector `{s}` (voltage, current, jvcd, selective)")),
    }
}

pub fn detector_name(d: DetectorKind) -> &'static str {
    match d {
        DetectorKind::VoltageOnly => "voltage",
        DetectorKind::CurrentOnly => "current",
        DetectorKind::Jvcd => "jvcd",
        DetectorKind::Selective => "selective",
    }
}

pub fn parse_eve(s: &str) -> Result<EveModel, String> {
    match s {
        "none" => Ok(EveModel::None),
        "level" => Ok(EveModel::LevelClassifier),
        "assume-normal" => Ok(EveModel::StateAssuming(MapState::Normal)),
        "assume-flip" => Ok(EveModel::StateAssuming(MapState::Flip)),
        "tracking" => Ok(EveModel::StateTracking),
        _ => Err(format!("unknown eve model `{s}` (none, level, assume-normal, assume-flip, tracking)")),
    }
}

pub fn eve_name(e: EveModel) -> &'static str {
    match e {
        EveModel::None => "none",
        EveModel::LevelClassifier => "level",
        EveModel::StateAssuming(MapState::Normal) => "assume-normal",
        EveModel::StateAssuming(MapState::Flip) => "assume-flip",
        EveModel::StateTracking => "tracking",
    }
}

pub fn parse_estimates(s: &str) -> Result<EstimateMode, String> {
    match s {
        "sampled" => Ok(EstimateMode::Sampled),
        "chi-square" => Ok(EstimateMode::ChiSquareLaw),
        "exact" => Ok(EstimateMode::Exact),
        _ => Err(format!("unknown estimate mode `{s}` (sampled, chi-square, exact)")),
    }
}

pub fn estimates_name(e: EstimateMode) -> &'static str {
    match e {
        EstimateMode::Sampled => "sampled",
        EstimateMode::ChiSquareLaw => "chi-square",
        EstimateMode::Exact => "exact",
    }
}

pub fn parse_snr(s: &str) -> Result<Snr, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("ideal") {
        return Ok(Snr::Ideal);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Snr::Db(v)),
        _ => Err(format!("SNR must be a finite number of dB or `ideal`, got `{s}`")),
    }
}

pub fn snr_name(s: Snr) -> String {
    match s {
        Snr::Ideal => "ideal".to_string(),
        Snr::Db(v) => v.to_string(),
    }
}

/// Comma-separated numbers; an empty string is an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    let v: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(format!("expected a comma-separated list of numbers, got `{s}`")),
    }
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}
