use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use autoconv_core::{RefineConfig, SearchConfig};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Record of one search or refine invocation, written as TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub wall_seconds: f64,
    /// Shortest round-trip decimal of the final objective.
    pub final_c: String,
    pub input: Option<String>,
    pub outputs: BTreeMap<String, String>,
    pub search: Option<SearchConfig>,
    pub refine: Option<RefineConfig>,
}

impl RunManifest {
    pub fn new(command: &str, started: DateTime<Utc>, final_c: f64) -> Self {
        let finished = Utc::now();
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            started: started.to_rfc3339(),
            finished: finished.to_rfc3339(),
            wall_seconds: (finished - started).num_milliseconds() as f64 / 1000.0,
            final_c: final_c.to_string(),
            input: None,
            outputs: BTreeMap::new(),
            search: None,
            refine: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).context("serializing manifest")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}
