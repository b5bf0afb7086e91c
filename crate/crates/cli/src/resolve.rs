//! Option resolution: explicit flags beat the `--config` file, which beats
//! built-in defaults. Unknown config keys are rejected so typos fail fast.

use std::path::Path;
use std::str::FromStr;

use gftbench_harness::kv::parse_kv;

use crate::{CliError, CliResult};

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "out",
    "graph",
    "sbm",
    "basis",
    "bases",
    "rescaled",
    "order",
    "orders",
    "layers",
    "layer-list",
    "lambda-ew",
    "lambda-grid",
    "jobs",
    "grid",
    "hidden",
    "activation",
    "dropout1",
    "dropout2",
    "lr",
    "weight-decay",
    "epochs",
    "patience",
    "per-class",
    "val-frac",
    "seeds",
    "delta",
    "c1",
    "c2",
    "checkpoint",
];

/// The parsed `--config` file (possibly empty).
pub struct Resolver {
    pairs: Vec<(String, String)>,
}

impl Resolver {
    pub fn load(config: Option<&Path>) -> CliResult<Self> {
        let Some(path) = config else {
            return Ok(Self { pairs: Vec::new() });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let pairs = parse_kv(&text, &path.display().to_string())
            .map_err(|e| CliError::usage(e.to_string()))?;
        for (key, _) in &pairs {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "unknown config key '{key}' in {}",
                    path.display()
                )));
            }
        }
        Ok(Self { pairs })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Flag value if given, else the config value, else `None`.
    pub fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(text) => text.parse::<T>().map(Some).map_err(|_| {
                CliError::usage(format!("config key '{key}' has invalid value '{text}'"))
            }),
            None => Ok(None),
        }
    }

    /// Like [`Resolver::opt`] with a final default.
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    /// Boolean switch: the flag turns it on; otherwise the config may say
    /// true/1/yes.
    pub fn get_bool(&self, flag: bool, key: &str) -> CliResult<bool> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(CliError::usage(format!(
                    "config key '{key}' must be boolean, got '{other}'"
                ))),
            },
        }
    }
}

/// "1..10" (inclusive), or a comma list of integers.
pub fn parse_range_list(text: &str, what: &str) -> CliResult<Vec<usize>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let lo: usize = a
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad {what} range start '{a}'")))?;
        let hi: usize = b
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad {what} range end '{b}'")))?;
        if hi < lo {
            return Err(CliError::usage(format!("empty {what} range {lo}..{hi}")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad {what} entry '{p}'")))
        })
        .collect()
}

/// A bare count ("10" → seeds 0..9) or a comma list of explicit seeds.
pub fn parse_seed_list(text: &str) -> CliResult<Vec<u64>> {
    let text = text.trim();
    if !text.contains(',') {
        let count: u64 = text
            .parse()
            .map_err(|_| CliError::usage(format!("bad seed count '{text}'")))?;
        return Ok((0..count).collect());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad seed entry '{p}'")))
        })
        .collect()
}

pub fn parse_float_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad {what} entry '{p}'")))
        })
        .collect()
}
