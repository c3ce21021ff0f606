//! Run manifests written beside every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: None,
            input_digest: None,
            started_unix: unix_now(),
            finished_unix: 0,
            config: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_owned(), value.to_string());
        self
    }

    /// Stamps the finish time and writes `<output>.manifest.toml`.
    pub fn write_beside(&mut self, output: &Path) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        let path = manifest_path(output);
        let text = toml::to_string(self).map_err(|e| CliError::Data(format!("manifest: {e}")))?;
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

/// First 64 bits of SHA-256, as 16 hex digits.
pub fn digest64(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}
