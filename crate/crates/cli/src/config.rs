//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys
//! are validated against the command's documented set, and every value a
//! command reads (including defaults) is recorded so the report carries the
//! full effective configuration.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    effective: RefCell<BTreeMap<String, String>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("config line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(Self { values, effective: RefCell::default() })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> CliResult<()> {
        let unknown: Vec<&str> = self.values.keys().map(String::as_str).filter(|k| !allowed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "unknown config keys for {command}: {} (allowed: {})",
                unknown.join(", "),
                allowed.join(", ")
            )))
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&self, key: &str, default: &str) -> String {
        let v = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.effective.borrow_mut().insert(key.to_string(), v.clone());
        v
    }

    pub fn get<T: FromStr + ToString>(&self, key: &str, default: T) -> CliResult<T> {
        let v = self.raw(key, &default.to_string());
        v.parse().map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}")))
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.raw(key, default)
    }

    /// Comma-separated list; an explicitly empty value gives an empty list.
    pub fn list(&self, key: &str, default: &[&str]) -> Vec<String> {
        self.raw(key, &default.join(","))
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    pub fn effective(&self) -> BTreeMap<String, String> {
        self.effective.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let c = RunConfig::parse("# header\n nodes = 128  # inline\n\nsurface=circle\n").unwrap();
        assert_eq!(c.get("nodes", 0usize).unwrap(), 128);
        assert_eq!(c.string("surface", "sphere"), "circle");
        assert_eq!(c.get("tolerance", 1e-3).unwrap(), 1e-3);
        let eff = c.effective();
        assert_eq!(eff["tolerance"], "0.001");
        assert_eq!(eff.len(), 3);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(RunConfig::parse("nodes 12"), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::parse("a = 1\na = 2"), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::parse(" = 2"), Err(CliError::Usage(_))));
        let c = RunConfig::parse("nodes = many").unwrap();
        assert!(c.get("nodes", 1usize).is_err());
        assert!(c.check_keys("verify", &["surfaces"]).is_err());
    }

    #[test]
    fn lists() {
        let c = RunConfig::parse("surfaces = circle, sphere\nempty =").unwrap();
        assert_eq!(c.list("surfaces", &[]), ["circle", "sphere"]);
        assert!(c.list("empty", &["x"]).is_empty());
        assert_eq!(c.list("missing", &["x", "y"]), ["x", "y"]);
    }
}
