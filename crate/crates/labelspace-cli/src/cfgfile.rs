//! Key = value training config files.
//!
//! Recognized keys: margin, negatives, lr, beta1, beta2, eps, epochs, seed,
//! k, hidden_dims, decay. `#` starts a comment. Flags override these values;
//! these values override built-in defaults.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::{usage, CliError, CliResult};

const KNOWN_KEYS: [&str; 11] = [
    "margin",
    "negatives",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "epochs",
    "seed",
    "k",
    "hidden_dims",
    "decay",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Data(anyhow::anyhow!("reading config {}: {e}", path.display()))
        })?;
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "{}:{}: expected \"key = value\", got {raw:?}",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(usage(format!(
                    "{}:{}: unknown config key {key:?}",
                    path.display(),
                    idx + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                usage(format!("config key {key} has unparseable value {raw:?}"))
            }),
        }
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Parses a comma-separated width list; "none" or "" mean no hidden layers.
pub fn parse_hidden_dims(raw: &str) -> CliResult<Vec<usize>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed == "none" {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad hidden layer width {part:?}")))
                .and_then(|w| {
                    if w == 0 {
                        Err(usage("hidden layer widths must be positive"))
                    } else {
                        Ok(w)
                    }
                })
        })
        .collect()
}

/// Parses a comma-separated list of transform dimensions.
pub fn parse_k_list(raw: &str) -> CliResult<Vec<usize>> {
    let values: Vec<usize> = raw
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad transform dimension {part:?}")))
        })
        .collect::<CliResult<_>>()?;
    if values.is_empty() || values.contains(&0) {
        return Err(usage("k list must contain positive values"));
    }
    Ok(values)
}
