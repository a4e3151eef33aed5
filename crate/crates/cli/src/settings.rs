//! Typed run settings resolved from config file, flags and environment.

use std::path::PathBuf;

use flipkljn_core::harness::{EveModel, DEFAULT_SHARD_LEN};
use flipkljn_core::noise::{Snr, BOLTZMANN, DEFAULT_BANDWIDTH, DEFAULT_R_LOW, DEFAULT_TEMPERATURE};
use flipkljn_core::protocol::{DetectorKind, EstimateMode, Scheme};

use crate::args::*;
use crate::config::{render_config, ConfigMap};
use crate::presets::Preset;
use crate::CliError;

pub const SEED_ENV: &str = "FLIPKLJN_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EXCHANGES: u64 = 1_000_000;

/// Keys accepted in config files.
pub const KEYS: &[&str] = &[
    "scheme",
    "detector",
    "alpha",
    "samples",
    "beta",
    "kappa",
    "eta",
    "xi",
    "snr_v",
    "snr_i",
    "exchanges",
    "seed",
    "eve",
    "k",
    "temperature",
    "bandwidth",
    "r_low",
    "format",
    "shard_len",
    "estimates",
    "flip_on_flagged",
    "preset",
    "alphas",
    "workers",
    "cache",
    "no_cache",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub scheme: Scheme,
    pub detector: DetectorKind,
    pub alpha: f64,
    pub samples: usize,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    pub xi: Option<f64>,
    pub snr_v: Snr,
    pub snr_i: Snr,
    pub exchanges: u64,
    pub seed: u64,
    pub eve: EveModel,
    pub k: f64,
    pub temperature: f64,
    pub bandwidth: f64,
    pub r_low: f64,
    pub format: Format,
    pub shard_len: u64,
    pub estimates: EstimateMode,
    pub flip_on_flagged: bool,
    pub preset: Option<Preset>,
    pub alphas: Option<Vec<f64>>,
    pub workers: usize,
    pub cache: Option<PathBuf>,
    pub no_cache: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            scheme: Scheme::FlipKljn,
            detector: DetectorKind::VoltageOnly,
            alpha: 10.0,
            samples: 100,
            beta: None,
            kappa: None,
            eta: None,
            xi: None,
            snr_v: Snr::Ideal,
            snr_i: Snr::Ideal,
            exchanges: DEFAULT_EXCHANGES,
            seed: DEFAULT_SEED,
            eve: EveModel::None,
            k: BOLTZMANN,
            temperature: DEFAULT_TEMPERATURE,
            bandwidth: DEFAULT_BANDWIDTH,
            r_low: DEFAULT_R_LOW,
            format: Format::Csv,
            shard_len: DEFAULT_SHARD_LEN,
            estimates: EstimateMode::Sampled,
            flip_on_flagged: false,
            preset: None,
            alphas: None,
            workers: 0,
            cache: None,
            no_cache: false,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
}

impl Settings {
    /// Build settings from file assignments overlaid by flag assignments.
    /// Unknown or unparsable file entries are configuration errors; the
    /// seed falls back to `seed_env` when neither source sets it.
    pub fn resolve(file: &ConfigMap, flags: &ConfigMap, seed_env: Option<&str>) -> Result<Self, CliError> {
        if let Some(bad) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown key `{bad}`")));
        }
        let mut s = Settings::default();
        for (map, from_file) in [(file, true), (flags, false)] {
            for (k, v) in map {
                s.apply(k, v).map_err(|e| {
                    if from_file {
                        CliError::Config(e)
                    } else {
                        CliError::Invalid(e)
                    }
                })?;
            }
        }
        if !file.contains_key("seed") && !flags.contains_key("seed") {
            if let Some(env) = seed_env {
                s.seed = env
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Invalid(format!("{SEED_ENV} must be an unsigned integer, got `{env}`")))?;
            }
        }
        Ok(s)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), String> {
        let opt = |v: &str| -> Result<Option<f64>, String> {
            if v.is_empty() {
                Ok(None)
            } else {
                num::<f64>(key, v).map(Some)
            }
        };
        match key {
            "scheme" => self.scheme = parse_scheme(v)?,
            "detector" => self.detector = parse_detector(v)?,
            "alpha" => self.alpha = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "beta" => self.beta = opt(v)?,
            "kappa" => self.kappa = opt(v)?,
            "eta" => self.eta = opt(v)?,
            "xi" => self.xi = opt(v)?,
            "snr_v" => self.snr_v = parse_snr(v)?,
            "snr_i" => self.snr_i = parse_snr(v)?,
            "exchanges" => self.exchanges = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "eve" => self.eve = parse_eve(v)?,
            "k" => self.k = num(key, v)?,
            "temperature" => self.temperature = num(key, v)?,
            "bandwidth" => self.bandwidth = num(key, v)?,
            "r_low" => self.r_low = num(key, v)?,
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "jsonl" => Format::JsonLines,
                    _ => return Err(format!("unknown format `{v}` (csv, jsonl)")),
                }
            }
            "shard_len" => self.shard_len = num(key, v)?,
            "estimates" => self.estimates = parse_estimates(v)?,
            "flip_on_flagged" => self.flip_on_flagged = parse_bool(v)?,
            "preset" => self.preset = if v.is_empty() { None } else { Some(v.parse()?) },
            "alphas" => self.alphas = Some(parse_list(v)?),
            "workers" => self.workers = num(key, v)?,
            "cache" => self.cache = (!v.is_empty()).then(|| PathBuf::from(v)),
            "no_cache" => self.no_cache = parse_bool(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Every setting that affects the output, as a config file. Worker
    /// count and cache location are left out: they never change results.
    pub fn echo(&self) -> String {
        let f = |v: f64| v.to_string();
        let mut e: Vec<(&str, String)> = vec![
            ("scheme", scheme_name(self.scheme).into()),
            ("detector", detector_name(self.detector).into()),
            ("alpha", f(self.alpha)),
            ("samples", self.samples.to_string()),
        ];
        for (k, v) in [("beta", self.beta), ("kappa", self.kappa), ("eta", self.eta), ("xi", self.xi)] {
            if let Some(v) = v {
                e.push((k, f(v)));
            }
        }
        e.extend([
            ("snr_v", snr_name(self.snr_v)),
            ("snr_i", snr_name(self.snr_i)),
            ("exchanges", self.exchanges.to_string()),
            ("seed", self.seed.to_string()),
            ("eve", eve_name(self.eve).into()),
            ("k", f(self.k)),
            ("temperature", f(self.temperature)),
            ("bandwidth", f(self.bandwidth)),
            ("r_low", f(self.r_low)),
            (
                "format",
                match self.format {
                    Format::Csv => "csv".into(),
                    Format::JsonLines => "jsonl".into(),
                },
            ),
            ("shard_len", self.shard_len.to_string()),
            ("estimates", estimates_name(self.estimates).into()),
            ("flip_on_flagged", self.flip_on_flagged.to_string()),
        ]);
        if let Some(p) = self.preset {
            e.push(("preset", p.name().into()));
        }
        if let Some(a) = &self.alphas {
            let list: Vec<String> = a.iter().map(|v| v.to_string()).collect();
            e.push(("alphas", list.join(",")));
        }
        let mut out = String::from("# flipkljn resolved configuration\n");
        out.push_str(&render_config(&e));
        out
    }
}
