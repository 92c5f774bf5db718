//! `key = value` run-configuration files. Keys use the long flag names
//! without the leading dashes; values parse exactly like the flag would.
//! Command-line flags always override file values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file `{}`", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "config `{}` line {}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<bool>()
                    .with_context(|| format!("config key `{key}`: expected true/false, got `{v}`"))
            })
            .transpose()
    }

    pub fn parse<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| {
                    anyhow::anyhow!("config key `{key}`: cannot parse `{v}`: {e}")
                })
            })
            .transpose()
    }

    /// Comma-separated list of floats, e.g. `thresholds = 0.1,0.2,0.5`.
    pub fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.values.get(key).map(|v| parse_float_list(v)).transpose()
    }
}

pub fn parse_float_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .with_context(|| format!("`{part}` is not a number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# run\nrepo = /tmp/r\n\nsegments = 4\ninclude-comments = false\n")
            .unwrap();
        let config = FileConfig::load(&path).unwrap();
        assert_eq!(config.string("repo").as_deref(), Some("/tmp/r"));
        assert_eq!(config.parse::<usize>("segments").unwrap(), Some(4));
        assert_eq!(config.bool("include-comments").unwrap(), Some(false));
        assert_eq!(config.string("missing"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "just words\n").unwrap();
        assert!(FileConfig::load(&path).is_err());
    }

    #[test]
    fn float_lists() {
        assert_eq!(parse_float_list("0.1, 0.5,1.0").unwrap(), vec![0.1, 0.5, 1.0]);
        assert!(parse_float_list("0.1,oops").is_err());
    }
}
