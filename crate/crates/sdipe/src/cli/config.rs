//! Flat key-value config files: `key = value` lines, `#` comments,
//! comma-separated lists. CLI flags override file values.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "out",
    "replicates",
    "bootstrap",
    "m",
    "delta",
    "proper",
    "ci_level",
    "n",
    "prevalence",
    "missing",
    "delta_grid",
    "beta0",
    "noise_sd",
    "estimator",
    "input",
    "outcome",
    "treatment",
    "mnar",
    "covariates",
    "na_token",
];

/// Raw key-value pairs from a config file.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected 'key = value'", line_no + 1))
            })?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "config line {}: unknown key '{key}'",
                    line_no + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key '{key}': cannot parse '{raw}'"))),
        }
    }

    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => parse_list(raw)
                .map(Some)
                .map_err(|_| Error::Config(format!("config key '{key}': cannot parse list '{raw}'"))),
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(raw: &str) -> std::result::Result<Vec<T>, ()> {
    let items: std::result::Result<Vec<T>, _> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse::<T>)
        .collect();
    match items {
        Ok(list) if !list.is_empty() => Ok(list),
        _ => Err(()),
    }
}
