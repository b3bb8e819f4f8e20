//! `key = value` run configuration files; flags take precedence.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    source: Option<PathBuf>,
    used: RefCell<BTreeSet<String>>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Settings, CliError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut s = Settings::parse(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))?;
        s.source = Some(path.to_path_buf());
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Settings, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(format!("line {}: empty key", i + 1));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", i + 1));
            }
        }
        Ok(Settings {
            values,
            source: None,
            used: RefCell::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    fn invalid(&self, key: &str, v: &str, e: impl Display) -> CliError {
        let origin = self
            .source
            .as_ref()
            .map_or_else(String::new, |p| format!("{}: ", p.display()));
        CliError::Config(format!("{origin}invalid value {v:?} for {key}: {e}"))
    }

    /// Flag value if given, else the file value, else `None`.
    pub fn get<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| v.parse::<T>().map_err(|e| self.invalid(key, v, e)))
            .transpose()
    }

    pub fn get_or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    /// Comma-separated list; a non-empty flag list wins over the file.
    pub fn list<T>(&self, key: &str, flag: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.raw(key);
        if !flag.is_empty() {
            return Ok(flag);
        }
        match from_file {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|e| self.invalid(key, s, e)))
                .collect(),
        }
    }

    pub fn flag(&self, key: &str, flag: bool) -> Result<bool, CliError> {
        Ok(flag || self.get::<bool>(key, None)?.unwrap_or(false))
    }

    /// Fails on keys no getter asked for, so typos do not pass silently.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown configuration key(s): {}", unknown.join(", "))))
        }
    }
}
