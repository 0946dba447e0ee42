//! TOML run configuration with dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::{self, PairKind, DEFAULT_MODES, DEFAULT_NODES};
use crate::continuation::ContinuationSettings;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem shared by the branch, summary and plot files.
    pub name: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), name: "branch".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub pair_kind: PairKind,
    pub l: f64,
    /// Number of Fourier modes `N`.
    pub n_modes: usize,
    /// Grid size `M`.
    pub nodes: usize,
    /// Scales solved by the `local` command.
    pub local_eps: Vec<f64>,
    pub continuation: ContinuationSettings,
    pub output: OutputConfig,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            pair_kind: PairKind::Corotating,
            l: 1.0,
            n_modes: DEFAULT_MODES,
            nodes: DEFAULT_NODES,
            local_eps: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            continuation: ContinuationSettings::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(Error::Config(format!("l must be positive, got {}", self.l)));
        }
        if self.n_modes == 0 {
            return Err(Error::Config("n_modes must be at least 1".into()));
        }
        boundary::check_resolution(self.nodes, self.n_modes).map_err(|e| Error::Config(e.to_string()))?;
        if self.local_eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Config("local_eps entries must be positive".into()));
        }
        if self.local_eps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("local_eps must be strictly increasing".into()));
        }
        if self.output.name.is_empty() {
            return Err(Error::Config("output.name must not be empty".into()));
        }
        self.continuation.validate(self.l)
    }

    pub fn jsonl_path(&self) -> PathBuf {
        self.output.dir.join(format!("{}.jsonl", self.output.name))
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output.dir.join(format!("{}.csv", self.output.name))
    }

    pub fn termination_path(&self) -> PathBuf {
        self.output.dir.join(format!("{}.termination.json", self.output.name))
    }

    pub fn error_path(&self) -> PathBuf {
        self.output.dir.join("error.json")
    }
}

/// Sets `table[a][b]...[z] = value` for a dotted key, creating tables on the way.
fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty key in '{key}'")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{p}' in '{key}' is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses the right-hand side of an override as a TOML value, falling back to
/// a bare string (so `pair_kind=translating` works unquoted).
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `key=value` overrides on top of a TOML document.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{ov}' is not of the form key=value")))?;
        set_dotted(table, key.trim(), parse_value(raw.trim()))?;
    }
    Ok(())
}

/// Builds and validates a configuration from an optional TOML file plus overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ContinuationConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    apply_overrides(&mut table, overrides)?;
    let cfg: ContinuationConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
