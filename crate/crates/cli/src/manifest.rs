//! Run manifests written next to every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub options: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seeds: Vec<u64>,
    /// From SOURCE_DATE_EPOCH; null otherwise, so reruns stay byte-identical.
    pub timestamp: Option<String>,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(subcommand: &str, options: &impl Serialize) -> Self {
        RunManifest {
            tool: "shakk",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            options: serde_json::to_value(options).expect("options serialize"),
            inputs: Vec::new(),
            seeds: Vec::new(),
            timestamp: source_date(),
            artifacts: Vec::new(),
            summary: None,
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        );
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// `<artifact>.manifest.json` next to a single-file artifact.
    pub fn write_sidecar(&self, artifact: &Path) -> CliResult<PathBuf> {
        let mut name = artifact.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        write_file(&path, self.to_json().as_bytes())?;
        Ok(path)
    }

    /// `manifest.json` inside an output directory.
    pub fn write_in(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("manifest.json");
        write_file(&path, self.to_json().as_bytes())?;
        Ok(path)
    }
}

fn source_date() -> Option<String> {
    let secs: i64 = std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()?;
    DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}
