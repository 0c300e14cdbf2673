use std::path::Path;

use anyhow::{Context, Result};
use interfere_core::util::sha256_file;
use interfere_core::{HeadId, ModelConfig};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Written as `manifest.json` next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub timestamp: String,
    pub workers: Option<usize>,
    pub checkpoint: Option<FileDigest>,
    pub config: Option<ModelConfig>,
    pub inputs: Vec<FileDigest>,
    pub heads: Vec<HeadId>,
    pub flags: serde_json::Value,
    pub results: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, workers: Option<usize>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            workers,
            checkpoint: None,
            config: None,
            inputs: Vec::new(),
            heads: Vec::new(),
            flags: serde_json::Value::Null,
            results: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
