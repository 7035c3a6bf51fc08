//! Run manifest: enough to reproduce a run and verify its artifacts.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Vec<String>,
    pub inputs: Vec<FileEntry>,
    pub config: serde_json::Value,
    pub out_dir: String,
    pub outputs: Vec<FileEntry>,
    pub wall_clock_secs: f64,
    /// Omitted unless --timestamps is given, so reruns stay comparable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn entry(path: &Path) -> std::io::Result<FileEntry> {
    Ok(FileEntry {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

impl RunManifest {
    pub fn new(command: Vec<String>, config: serde_json::Value, out_dir: &Path) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            inputs: Vec::new(),
            config,
            out_dir: out_dir.display().to_string(),
            outputs: Vec::new(),
            wall_clock_secs: 0.0,
            finished_at: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs.push(entry(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> std::io::Result<()> {
        self.outputs.push(entry(path)?);
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
