//! Optimised-threshold cache.
//!
//! A small CSV table keyed by `(alpha, N, detector)`. Floats are written in
//! Rust's shortest round-trip form, so a value read back is bit-identical to
//! the one computed and a cache hit reproduces a miss exactly.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use flipkljn_core::protocol::{DetectorKind, ThresholdSet};
use thiserror::Error;

use crate::args::detector_name;

pub const HEADER: &str = "alpha,N,detector,beta,kappa,eta,xi,objective";
pub const FILE_NAME: &str = "thresholds.csv";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("threshold cache line {line}: {message}")]
pub struct CacheError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheEntry {
    pub alpha: f64,
    pub n: usize,
    pub detector: DetectorKind,
    pub thresholds: ThresholdSet,
    /// Analytic `P_b` at `(beta, kappa)`.
    pub objective: f64,
}

impl CacheEntry {
    pub fn to_line(&self) -> String {
        let t = &self.thresholds;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.alpha,
            self.n,
            detector_name(self.detector),
            t.beta,
            t.kappa,
            t.eta,
            t.xi,
            self.objective
        )
    }

    fn matches(&self, alpha: f64, n: usize, detector: DetectorKind) -> bool {
        self.alpha.to_bits() == alpha.to_bits() && self.n == n && self.detector == detector
    }
}

pub fn parse_cache(text: &str) -> Result<Vec<CacheEntry>, CacheError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim() == HEADER => {}
        Some(_) => {
            return Err(CacheError {
                line: 1,
                message: format!("expected header `{HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let err = |message: String| CacheError { line, message };
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64, CacheError> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("field {} is not a finite number: `{}`", i + 1, fields[i])))
        };
        let n = fields[1]
            .parse::<usize>()
            .map_err(|_| err(format!("N is not an integer: `{}`", fields[1])))?;
        let detector = crate::args::parse_detector(fields[2]).map_err(err)?;
        out.push(CacheEntry {
            alpha: num(0)?,
            n,
            detector,
            thresholds: ThresholdSet::new(num(3)?, num(4)?, num(5)?, num(6)?),
            objective: num(7)?,
        });
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ThresholdCache {
    path: PathBuf,
    entries: Vec<CacheEntry>,
    writable: bool,
}

impl ThresholdCache {
    /// Load the cache at `path`. A missing file is an empty cache; a file
    /// that does not parse is reported and left untouched.
    pub fn open(path: &Path) -> (Self, Option<String>) {
        let mut cache = Self {
            path: path.to_path_buf(),
            entries: Vec::new(),
            writable: true,
        };
        let warning = match fs::read_to_string(path) {
            Ok(text) => match parse_cache(&text) {
                Ok(entries) => {
                    cache.entries = entries;
                    None
                }
                Err(e) => {
                    cache.writable = false;
                    Some(format!("ignoring {}: {e}", path.display()))
                }
            },
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => {
                cache.writable = false;
                Some(format!("ignoring {}: {e}", path.display()))
            }
        };
        (cache, warning)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn lookup(&self, alpha: f64, n: usize, detector: DetectorKind) -> Option<CacheEntry> {
        self.entries.iter().rev().find(|e| e.matches(alpha, n, detector)).copied()
    }

    /// Append an entry, creating the file with its header if needed.
    pub fn insert(&mut self, entry: CacheEntry) -> io::Result<()> {
        self.entries.push(entry);
        if !self.writable {
            return Ok(());
        }
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let fresh = !self.path.exists();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        if fresh {
            writeln!(f, "{HEADER}")?;
        }
        writeln!(f, "{}", entry.to_line())
    }
}
