//! JSON sidecar describing how an output file was produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// `git describe`-style version captured at build time.
pub const VERSION: &str = env!("VQO_VERSION");

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub config: &'a BTreeMap<String, BTreeMap<String, String>>,
    /// Command-specific results worth keeping next to the CSV.
    pub extra: BTreeMap<String, Value>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

impl Manifest<'_> {
    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
