//! Run manifests: what a command read, how it was configured, what it wrote.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Written next to every command output. Contains no timestamps, so identical
/// runs produce identical manifests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Input path to SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    pub config: BTreeMap<String, String>,
    /// Output path to SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs
            .insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.outputs
            .insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    /// Path of the manifest written alongside `output`.
    pub fn path_for(output: impl AsRef<Path>) -> std::path::PathBuf {
        let mut s = output.as_ref().as_os_str().to_owned();
        s.push(".manifest.json");
        s.into()
    }

    pub fn write_for(&self, output: impl AsRef<Path>) -> Result<()> {
        let path = Self::path_for(output);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    }
}
