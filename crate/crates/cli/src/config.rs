//! Layered settings: command-line flags over a `key = value` file over
//! built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scarquench::{Error, Result};
use serde_json::{Map, Value};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "SCARQUENCH_OUT_DIR";

/// Parse a config file. Blank lines and lines starting with `#` are
/// ignored; every other line is `key = value`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::InvalidArgument(format!("config line {}: expected key = value", n + 1)));
        };
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidArgument(format!("config line {}: duplicate key {key:?}", n + 1)));
        }
    }
    Ok(map)
}

/// Resolves each setting and records the result for the header echo.
pub struct Settings {
    file: BTreeMap<String, String>,
    used: Map<String, Value>,
}

impl Settings {
    pub fn new(config_path: Option<&Path>) -> Result<Self> {
        let file = match config_path {
            Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file, used: Map::new() })
    }

    #[cfg(test)]
    fn from_map(file: BTreeMap<String, String>) -> Self {
        Self { file, used: Map::new() }
    }

    /// Flag value, else config-file value, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Clone + Into<Value>,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => {
                    s.parse().map_err(|_| Error::InvalidArgument(format!("config key {key}: cannot parse {s:?}")))?
                }
                None => default,
            },
        };
        self.used.insert(key.to_string(), value.clone().into());
        Ok(value)
    }

    /// Boolean switch: present flag wins, then the file, then `false`.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        self.get(key, flag.then_some(true), false)
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.used.insert(key.to_string(), value.into());
    }

    /// Reject config-file keys that the command never asked for.
    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !self.used.contains_key(*k) && !matches!(k.as_str(), "out" | "threads"))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    /// Sorted echo of every resolved setting.
    pub fn echo(&self) -> Value {
        Value::Object(self.used.clone())
    }

    /// `--out`, else the environment override, else the file, else `out`.
    pub fn out_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| self.file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn threads(&self, flag: Option<usize>) -> Result<Option<usize>> {
        match flag {
            Some(n) => Ok(Some(n)),
            None => self
                .file
                .get("threads")
                .map(|s| {
                    s.parse().map_err(|_| Error::InvalidArgument(format!("config key threads: cannot parse {s:?}")))
                })
                .transpose(),
        }
    }
}
