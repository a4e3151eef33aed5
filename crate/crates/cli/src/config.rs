//! Flat `key = value` configuration files.
//!
//! One assignment per line. `#` starts a comment anywhere on a line. Keys
//! may use `-` or `_` interchangeably and are normalised to `_`. A repeated
//! key overrides the earlier value.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Parsed assignments in file order, before value validation.
pub type ConfigMap = BTreeMap<String, String>;

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

pub fn parse_config(text: &str) -> Result<ConfigMap, ParseError> {
    let mut map = ConfigMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = normalize_key(key);
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ParseError {
                line,
                message: format!("invalid key `{}`", key.escape_debug()),
            });
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Render assignments one per line in the given order.
pub fn render_config(entries: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}
