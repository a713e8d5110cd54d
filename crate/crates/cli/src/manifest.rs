use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub timestamp: String,
    pub subcommand: String,
    pub config_digest: String,
    /// Input path to SHA-256.
    pub dataset_digests: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    /// Output path to SHA-256.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_digest: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            subcommand: subcommand.to_string(),
            config_digest: config_digest.to_string(),
            dataset_digests: BTreeMap::new(),
            seeds: Vec::new(),
            outputs: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.dataset_digests.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Writes `bytes` to `path` and records its digest.
    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(bytes)));
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn finish(self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// `<out>.manifest.json` beside a single-file output.
pub fn beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
