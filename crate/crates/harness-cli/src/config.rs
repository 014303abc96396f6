//! Plain-text configuration: `key = value` lines under `[section]` headers.
//! Parameter ranges are validated before an experiment launches.

use crate::Error;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut out = Config::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                out.sections.entry(section.clone()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            out.sections
                .entry(section.clone())
                .or_default()
                .insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, Error> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("[{section}] {key}: bad number `{v}`"))),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, Error> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("[{section}] {key}: bad integer `{v}`"))),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, Error> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("[{section}] {key}: bad integer `{v}`"))),
        }
    }

    pub fn f64_list_or(
        &self,
        section: &str,
        key: &str,
        default: &[f64],
    ) -> Result<Vec<f64>, Error> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("[{section}] {key}: bad list `{v}`")))
                })
                .collect(),
        }
    }

    /// Validates the shared parameter ranges the spec pins.
    pub fn validate_ranges(&self) -> Result<(), Error> {
        for (section, kv) in &self.sections {
            if let Some(eps) = kv.get("epsilon") {
                let e: f64 = eps
                    .parse()
                    .map_err(|_| Error::Config(format!("[{section}] epsilon: `{eps}`")))?;
                if !(0.0 < e && e < 0.5) {
                    return Err(Error::Config(format!(
                        "[{section}] epsilon must lie in (0, 1/2), got {e}"
                    )));
                }
            }
            if let Some(d) = kv.get("delta") {
                let d: f64 = d
                    .parse()
                    .map_err(|_| Error::Config(format!("[{section}] delta: `{d}`")))?;
                if !(0.0 < d && d < 1.0) {
                    return Err(Error::Config(format!(
                        "[{section}] delta must lie in (0, 1), got {d}"
                    )));
                }
            }
            // spatial grids feed the spectral transforms; velocity grids
            // have no such constraint (the pinned comparison resolution is
            // 24^2 velocities)
            for key in ["x_cells", "grid"] {
                if let Some(n) = kv.get(key) {
                    let n: usize = n
                        .parse()
                        .map_err(|_| Error::Config(format!("[{section}] {key}: `{n}`")))?;
                    if !n.is_power_of_two() {
                        return Err(Error::Config(format!(
                            "[{section}] {key} must be a power of two, got {n}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
