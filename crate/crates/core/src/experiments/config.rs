use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Flat `key = value` configuration. Lines starting with `#` and text after
/// an inline `#` are comments. Lists are whitespace or comma separated.
#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: Mutex<BTreeMap<String, String>>,
}

impl Clone for Config {
    fn clone(&self) -> Self {
        Self { values: self.values.clone(), resolved: Mutex::new(BTreeMap::new()) }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", k + 1)))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {}: bad key '{key}'", k + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", k + 1)));
            }
        }
        Ok(Self { values, resolved: Mutex::new(BTreeMap::new()) })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Overrides or adds a key, e.g. from the command line.
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.lock().unwrap().insert(key.to_string(), value);
    }

    /// The seed has no default.
    pub fn seed(&self) -> Result<u64> {
        let raw = self.values.get("seed").ok_or_else(|| Error::Config("'seed' is mandatory".into()))?;
        let seed = raw.parse().map_err(|_| Error::Config(format!("seed: cannot parse '{raw}'")))?;
        self.record("seed", raw.clone());
        Ok(seed)
    }

    pub fn get<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
    {
        let value = match self.values.get(key) {
            Some(raw) => raw.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{raw}'")))?,
            None => default,
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: FromStr + Display + Clone,
    {
        let value: Vec<T> = match self.values.get(key) {
            Some(raw) => raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{s}'"))))
                .collect::<Result<_>>()?,
            None => default.to_vec(),
        };
        self.record(key, super::join(&value));
        Ok(value)
    }

    /// Every key read so far with the value actually used.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.lock().unwrap().clone()
    }

    /// Keys present in the text that no experiment step has read.
    pub fn unused(&self) -> Vec<String> {
        let r = self.resolved.lock().unwrap();
        self.values.keys().filter(|k| !r.contains_key(*k)).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let c = Config::parse("# header\nseed = 7\nts = 1, 2 3 # inline\nkappa=0.3\n").unwrap();
        assert_eq!(c.seed().unwrap(), 7);
        assert_eq!(c.list::<f64>("ts", &[]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(c.get("forms", 20usize).unwrap(), 20);
        assert_eq!(c.unused(), vec!["kappa".to_string()]);
        assert_eq!(c.resolved()["forms"], "20");
        assert!(Config::parse("seed 7").is_err());
        assert!(Config::parse("a = 1\na = 2").is_err());
        assert!(Config::parse("kappa = 1").unwrap().seed().is_err());
    }
}
