//! Flat `key = value` scenario files with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Syntax { line: usize, text: String },
    Invalid { key: String, value: String, reason: String },
    Unknown(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(msg) => write!(f, "cannot read config: {msg}"),
            ConfigError::Syntax { line, text } => {
                write!(f, "config line {line}: expected key=value, got `{text}`")
            }
            ConfigError::Invalid { key, value, reason } => {
                write!(f, "invalid parameter `{key}` = {value}: {reason}")
            }
            ConfigError::Unknown(key) => write!(f, "unknown parameter `{key}`"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw key/value pairs; typed access marks keys as consumed so leftovers can
/// be reported as unknown.
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: assignment.to_string(),
        })?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.values.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Invalid {
                key: key.to_string(),
                reason: format!("cannot parse as {}", std::any::type_name::<T>()),
                value: v,
            }),
        }
    }

    pub fn take_list<T: FromStr + Clone>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError> {
        match self.values.remove(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| ConfigError::Invalid {
                        key: key.to_string(),
                        value: v.clone(),
                        reason: format!("cannot parse `{}`", item.trim()),
                    })
                })
                .collect(),
        }
    }

    /// Fails on the first key no command consumed.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.values.into_keys().next() {
            Some(k) => Err(ConfigError::Unknown(k)),
            None => Ok(()),
        }
    }
}

pub fn invalid(key: &str, value: impl fmt::Display, reason: &str) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut c = Config::parse("# scenario\nr = 0.4\nns=1, 2,4 # trailing\n\n").unwrap();
        c.apply_override("beta=2").unwrap();
        assert_eq!(c.take("r", 0.0).unwrap(), 0.4);
        assert_eq!(c.take_list("ns", &[1usize]).unwrap(), vec![1, 2, 4]);
        assert_eq!(c.take("beta", 1.0).unwrap(), 2.0);
        assert_eq!(c.take("missing", 7u32).unwrap(), 7);
        c.finish().unwrap();
    }

    #[test]
    fn reports_bad_lines_and_unknown_keys() {
        assert!(matches!(Config::parse("oops"), Err(ConfigError::Syntax { line: 1, .. })));
        let mut c = Config::parse("r=abc\nzzz=1").unwrap();
        assert!(c.take("r", 0.0f64).unwrap_err().to_string().contains("`r`"));
        assert!(c.finish().unwrap_err().to_string().contains("zzz"));
    }
}
