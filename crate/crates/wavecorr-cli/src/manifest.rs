//! Run manifests: config hash, stage wall times, and a checksummed file
//! inventory. Re-running an identical config reproduces identical checksums.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::errors::{CliError, Result};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    /// SHA-256 of the canonical (JSON-serialized) config.
    pub config_hash: String,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_vec(config)
        .map_err(|e| CliError::ConfigInvalid(format!("config hash: {e}")))?;
    Ok(sha256_hex(&canonical))
}

pub fn file_record(output_dir: &Path, path: &Path) -> Result<FileRecord> {
    let bytes = fs::read(path).map_err(|e| CliError::StageFailure {
        stage: "manifest",
        message: format!("read {path:?}: {e}"),
    })?;
    let rel = path
        .strip_prefix(output_dir)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned();
    Ok(FileRecord {
        path: rel,
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn save(&self, output_dir: &Path) -> Result<PathBuf> {
        let path = output_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::StageFailure {
            stage: "manifest",
            message: e.to_string(),
        })?;
        fs::write(&path, text).map_err(|e| CliError::StageFailure {
            stage: "manifest",
            message: format!("write {path:?}: {e}"),
        })?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::StageFailure {
            stage: "manifest",
            message: format!("read {path:?}: {e}"),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::StageFailure {
            stage: "manifest",
            message: format!("decode {path:?}: {e}"),
        })
    }

    pub fn find(&self, name: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.path == name)
    }
}
