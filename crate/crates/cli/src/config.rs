//! Flat `key=value` settings files. Flags given on the command line win.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", no + 1)))?;
            // accept `--t-min=0` as well as `t-min=0`
            let key = key.trim().trim_start_matches("--").to_string();
            file.insert(key, value.trim().to_string());
        }
        Ok(Self { file })
    }

    /// Rejects keys the current subcommand does not understand.
    pub fn restrict(&self, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.file.keys() {
            if !allowed.contains(&key.as_str()) && key != "config" {
                return Err(CliError::Usage(format!("unknown config key '{key}'")));
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key '{key}': cannot parse '{raw}'"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        self.get(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing required value --{key}")))
    }

    pub fn or<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str, flag: bool) -> Result<bool, CliError> {
        Ok(flag || self.get::<bool>(key, None)?.unwrap_or(false))
    }
}
