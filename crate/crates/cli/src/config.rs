//! Flat `key = value` files with `[section]` headers.
//!
//! ```text
//! file    := line*
//! line    := blank | comment | section | entry
//! comment := ('#' | ';') any*
//! section := '[' name ']'
//! entry   := key '=' value
//! ```
//!
//! Keys are addressed as `section.key`. Whitespace around names and values is
//! ignored, a repeated key is an error, and values are interpreted later by
//! whoever reads them, so every diagnostic can point back at its line.

use std::collections::BTreeMap;
use std::fmt;

/// Where a value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub message: String,
}

impl ConfigError {
    pub fn new(origin: Option<Origin>, message: impl Into<String>) -> Self {
        Self {
            origin,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Some(Origin::Line(n)) => write!(f, "line {n}: {}", self.message),
            Some(Origin::Flag) => write!(f, "command line: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, (String, Origin)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::new(Some(Origin::Line(n)), "section header is missing ']'"))?
                    .trim();
                if !is_name(name) {
                    return Err(ConfigError::new(
                        Some(Origin::Line(n)),
                        format!("bad section name '{name}'"),
                    ));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(Some(Origin::Line(n)), format!("expected key = value, got '{line}'"))
            })?;
            let key = key.trim();
            if !is_name(key) {
                return Err(ConfigError::new(Some(Origin::Line(n)), format!("bad key '{key}'")));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if let Some((_, Origin::Line(first))) = config.entries.get(&full) {
                return Err(ConfigError::new(
                    Some(Origin::Line(n)),
                    format!("'{full}' is already set on line {first}"),
                ));
            }
            config.entries.insert(full, (value.trim().to_string(), Origin::Line(n)));
        }
        Ok(config)
    }

    /// Sets or replaces a key from the command line.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (value.into(), Origin::Flag));
    }

    /// Parses `section.key=value`.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(Origin::Flag), format!("expected key=value, got '{assignment}'")))?;
        let key = key.trim();
        if !key.split('.').all(is_name) {
            return Err(ConfigError::new(Some(Origin::Flag), format!("bad key '{key}'")));
        }
        self.set(key, value.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn origin(&self, key: &str) -> Option<Origin> {
        self.entries.get(key).map(|(_, o)| o.clone())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Error located at `key`'s line.
    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.origin(key), message)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.error(key, format!("{key}: cannot parse '{v}'"))),
        }
    }

    pub fn parsed_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// A count that must be at least 1.
    pub fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v: usize = self.parsed_or(key, default)?;
        if v == 0 {
            return Err(self.error(key, format!("{key} must be at least 1")));
        }
        Ok(v)
    }

    /// A positive finite float.
    pub fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed::<f64>(key)? {
            Some(v) if !(v.is_finite() && v > 0.0) => Err(self.error(key, format!("{key} must be positive, got {v}"))),
            other => Ok(other),
        }
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let c = Config::parse("seed = 3\n# note\n[space]\nspec = spider:3\n\n; other\n[regret]\nrounds=10\n").unwrap();
        assert_eq!(c.get("seed"), Some("3"));
        assert_eq!(c.get("space.spec"), Some("spider:3"));
        assert_eq!(c.get("regret.rounds"), Some("10"));
        assert_eq!(c.origin("regret.rounds"), Some(Origin::Line(8)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Config::parse("[space]\nspec = euclidean:2\nradius\n").unwrap_err();
        assert_eq!(e.origin, Some(Origin::Line(3)));
        let e = Config::parse("[space\n").unwrap_err();
        assert_eq!(e.origin, Some(Origin::Line(1)));
        let e = Config::parse("[a]\nx=1\nx=2\n").unwrap_err();
        assert!(e.to_string().starts_with("line 3:"), "{e}");
    }

    #[test]
    fn flags_override_file_values() {
        let mut c = Config::parse("[regret]\nrounds = 10\n").unwrap();
        c.set_assignment("regret.rounds=20").unwrap();
        assert_eq!(c.count("regret.rounds", 1).unwrap(), 20);
        assert_eq!(c.origin("regret.rounds"), Some(Origin::Flag));
        assert!(c.set_assignment("nonsense").is_err());
    }

    #[test]
    fn typed_getters() {
        let c = Config::parse("[a]\nn = 0\nx = -1\ny = abc\n").unwrap();
        assert!(c.count("a.n", 5).is_err());
        assert!(c.positive("a.x").is_err());
        assert!(c.parsed::<f64>("a.y").is_err());
        assert_eq!(c.count("a.missing", 5).unwrap(), 5);
    }
}
