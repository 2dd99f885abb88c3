//! `key = value` configuration files and flag/config/default resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Parsed config file. Keys are flag names without the leading dashes;
/// underscores and dashes are interchangeable.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`", n + 1));
            };
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(format!("line {}: empty key", n + 1));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", n + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::io(format!("--config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("--config {}: {e}", path.display())))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Resolves each parameter from its flag, then the config file, then the
/// default, and records the result for printing.
pub struct Resolver {
    config: Config,
    used: BTreeSet<String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(config: Config) -> Self {
        Self {
            config,
            used: BTreeSet::new(),
            resolved: Vec::new(),
        }
    }

    fn parse_config<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        match self.config.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key `{key}`: invalid value `{s}`: {e}"))),
        }
    }

    fn record(&mut self, key: &str, value: String) {
        self.used.insert(key.to_string());
        self.resolved.push((key.to_string(), value));
    }

    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.parse_config(key)?.unwrap_or(default),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Like [`Resolver::value`] without a default; `None` is printed as `auto`.
    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.parse_config(key)?,
        };
        self.record(key, v.as_ref().map_or_else(|| "auto".to_string(), T::to_string));
        Ok(v)
    }

    /// A parameter that must come from the flag or the config.
    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        match self.optional(key, flag)? {
            Some(v) => {
                self.resolved.pop();
                self.record(key, v.to_string());
                Ok(v)
            }
            None => Err(CliError::usage(format!("missing --{key} (flag or config key)"))),
        }
    }

    pub fn opt_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
        let v = match flag {
            Some(p) => Some(p),
            None => {
                self.used.insert(key.to_string());
                self.config.get(key).map(PathBuf::from)
            }
        };
        self.record(
            key,
            v.as_ref()
                .map_or_else(|| "none".to_string(), |p| p.display().to_string()),
        );
        Ok(v)
    }

    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.opt_path(key, flag)?
            .ok_or_else(|| CliError::usage(format!("missing --{key} (flag or config key)")))
    }

    /// Fails on config keys this command never asked for.
    pub fn finish(self) -> Result<Vec<(String, String)>, CliError> {
        if let Some(k) = self.config.entries.keys().find(|k| !self.used.contains(*k)) {
            return Err(CliError::usage(format!(
                "config key `{k}` is not a parameter of this command"
            )));
        }
        Ok(self.resolved)
    }
}
