//! Tabular output: CSV or JSON lines with a fixed column set.

use flipkljn_core::harness::ExperimentReport;
use flipkljn_core::noise::Snr;

use crate::args::{detector_name, scheme_name};
use crate::settings::Format;

pub const COLUMNS: [&str; 21] = [
    "scheme",
    "detector",
    "alpha",
    "N",
    "beta",
    "kappa",
    "eta",
    "xi",
    "snr_db_v",
    "snr_db_i",
    "exchanges",
    "seed",
    "ber",
    "ber_ci_low",
    "ber_ci_high",
    "discarded_pct",
    "mismatch_episodes",
    "mean_episode_len",
    "eve_acc_overall",
    "eve_acc_nonintermediate",
    "analytic_pb",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(u64),
    Float(f64),
    Empty,
}

impl Value {
    fn opt(v: Option<f64>) -> Value {
        v.map_or(Value::Empty, Value::Float)
    }

    fn csv(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) if f.is_finite() => format!("{f:.8e}"),
            Value::Float(_) | Value::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Str(s) => serde_json::Value::String(s.clone()).to_string(),
            Value::Int(i) => i.to_string(),
            // Same 9 significant digits as the CSV, in JSON number syntax.
            Value::Float(f) if f.is_finite() => {
                let rounded: f64 = format!("{f:.8e}").parse().unwrap_or(*f);
                serde_json::Value::from(rounded).to_string()
            }
            Value::Float(_) | Value::Empty => "null".to_string(),
        }
    }
}

pub fn snr_value(s: Snr) -> Value {
    match s {
        Snr::Ideal => Value::Empty,
        Snr::Db(v) => Value::Float(v),
    }
}

/// One output row in [`COLUMNS`] order.
pub fn report_row(r: &ExperimentReport) -> Vec<Value> {
    let cfg = &r.config;
    let p = &cfg.protocol;
    let t = &p.thresholds;
    let (lo, hi) = r.ber_ci.map_or((None, None), |(a, b)| (Some(a), Some(b)));
    vec![
        Value::Str(scheme_name(p.scheme).into()),
        Value::Str(detector_name(p.detector).into()),
        Value::Float(cfg.env.alpha()),
        Value::Int(p.samples as u64),
        Value::Float(t.beta),
        Value::Float(t.kappa),
        Value::Float(t.eta),
        Value::Float(t.xi),
        snr_value(p.channels.voltage),
        snr_value(p.channels.current),
        Value::Int(cfg.exchanges),
        Value::Int(cfg.master_seed),
        Value::opt(r.ber),
        Value::opt(lo),
        Value::opt(hi),
        Value::Float(r.discarded_percentage),
        Value::Int(r.episodes.count),
        Value::opt(r.episodes.mean_length()),
        Value::opt(r.eve_accuracy_overall),
        Value::opt(r.eve_accuracy_nonintermediate),
        Value::opt(r.analytic_pb),
    ]
}

/// Render a table. CSV always has a header; JSON lines has one object per row.
pub fn render(columns: &[&str], rows: &[Vec<Value>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&columns.join(","));
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(Value::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Format::JsonLines => {
            for row in rows {
                let fields: Vec<String> = columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| format!("{}:{}", serde_json::Value::String((*c).into()), v.json()))
                    .collect();
                out.push('{');
                out.push_str(&fields.join(","));
                out.push_str("}\n");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(Value::Float(0.0263).csv(), "2.63000000e-2");
        assert_eq!(Value::Float(12.0).csv(), "1.20000000e1");
        assert_eq!(Value::Float(f64::NAN).csv(), "");
        assert_eq!(Value::Empty.json(), "null");
        assert_eq!(Value::Float(0.123456789123).json(), "0.123456789");
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(render(&["a", "b"], &[], Format::Csv), "a,b\n");
        assert_eq!(render(&["a", "b"], &[], Format::JsonLines), "");
    }

    #[test]
    fn json_lines_are_valid_objects() {
        let rows = vec![vec![Value::Str("flip".into()), Value::Float(1.5), Value::Empty, Value::Int(3)]];
        let text = render(&["scheme", "x", "y", "N"], &rows, Format::JsonLines);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["scheme"], "flip");
        assert_eq!(v["x"], 1.5);
        assert!(v["y"].is_null());
        assert_eq!(v["N"], 3);
    }
}
