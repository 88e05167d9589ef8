//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored.
//! Every key must be known to the command that reads the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::bayes::{CoherenceTime, FieldGrid};
use crate::error::{Error, Result};
use crate::policy::PolicyKind;
use crate::sim::{SimConfig, TrueField};

/// Keys shared by every command that simulates or searches.
pub const SIM_KEYS: &[&str] = &[
    "prior_mean",
    "prior_std",
    "coherence_time",
    "n_measurements",
    "n_realizations",
    "master_seed",
    "policy",
    "tau_min",
    "tau_max",
    "tau_grid_size",
    "theta_grid_size",
    "kpe_tau0",
    "kpe_theta0",
    "b_min",
    "b_max",
    "n_points",
    "true_field",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config("", format!("line {}: empty key", n + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::config(key, format!("line {}: duplicate key", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Load `path` if given, otherwise an empty configuration.
    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Reject keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&[&str]]) -> Result<()> {
        for key in self.keys() {
            if !allowed.iter().any(|set| set.contains(&key)) {
                return Err(Error::config(key, "unknown key"));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parse `key` with `FromStr`, or return `default` if absent.
    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    /// Number or `inf`.
    pub fn coherence_or(&self, key: &str, default: CoherenceTime) -> Result<CoherenceTime> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_coherence(v).map_err(|reason| Error::config(key, reason)),
        }
    }

    /// Comma-separated list parsed element by element.
    pub fn list_or<T>(&self, key: &str, default: Vec<T>, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => {
                let items: Vec<T> = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(&parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|reason| Error::config(key, reason))?;
                if items.is_empty() {
                    return Err(Error::config(key, "empty list"));
                }
                Ok(items)
            }
        }
    }

    /// Apply the shared simulation keys on top of `base` and validate.
    pub fn sim_config(&self, base: SimConfig) -> Result<SimConfig> {
        let mut cfg = base;
        cfg.prior_mean = self.get_or("prior_mean", cfg.prior_mean)?;
        cfg.prior_std = self.get_or("prior_std", cfg.prior_std)?;
        cfg.coherence_time = self.coherence_or("coherence_time", cfg.coherence_time)?;
        cfg.n_measurements = self.get_or("n_measurements", cfg.n_measurements)?;
        cfg.n_realizations = self.get_or("n_realizations", cfg.n_realizations)?;
        cfg.master_seed = self.get_or("master_seed", cfg.master_seed)?;
        let p = &mut cfg.policy;
        p.kind = match self.raw("policy") {
            None => p.kind,
            Some(v) => v.parse::<PolicyKind>()?,
        };
        p.tau_min = self.get_or("tau_min", p.tau_min)?;
        p.tau_max = self.get_or("tau_max", p.tau_max)?;
        p.tau_grid_size = self.get_or("tau_grid_size", p.tau_grid_size)?;
        p.theta_grid_size = self.get_or("theta_grid_size", p.theta_grid_size)?;
        p.kpe_tau0 = self.get_or("kpe_tau0", p.kpe_tau0)?;
        p.kpe_theta0 = self.get_or("kpe_theta0", p.kpe_theta0)?;
        let b_min = self.get_or("b_min", cfg.grid.b_min())?;
        let b_max = self.get_or("b_max", cfg.grid.b_max())?;
        let n_points = self.get_or("n_points", cfg.grid.n_points())?;
        cfg.grid = FieldGrid::new(b_min, b_max, n_points).map_err(as_config)?;
        cfg.true_field = match self.raw("true_field") {
            None => cfg.true_field,
            Some(v) if v.eq_ignore_ascii_case("sample") => TrueField::Sampled,
            Some(v) => TrueField::Fixed(v.parse().map_err(|e| Error::config("true_field", format!("cannot parse `{v}`: {e}")))?),
        };
        cfg.validate().map_err(as_config)?;
        Ok(cfg)
    }
}

pub fn parse_coherence(v: &str) -> std::result::Result<CoherenceTime, String> {
    if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("infinity") {
        return Ok(CoherenceTime::Infinite);
    }
    let t: f64 = v.parse().map_err(|e| format!("cannot parse `{v}`: {e}"))?;
    CoherenceTime::finite(t).map_err(|e| e.to_string())
}

/// Report parameter validation failures under the offending config key.
pub(crate) fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other,
    }
}
