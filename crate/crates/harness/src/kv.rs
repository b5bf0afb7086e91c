//! Flat `key=value` text: config files and run manifests.
//!
//! One pair per line; blank lines and lines starting with `#` are ignored.
//! Keys may not be empty or repeat.

use crate::error::{HarnessError, Result};

pub fn parse_kv(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::parse(source, i + 1, "expected key=value"));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(HarnessError::parse(source, i + 1, "empty key"));
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(HarnessError::parse(
                source,
                i + 1,
                format!("duplicate key '{key}'"),
            ));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

pub fn format_kv<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k.as_ref());
        out.push('=');
        out.push_str(v.as_ref());
        out.push('\n');
    }
    out
}
