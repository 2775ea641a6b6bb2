//! Per-command manifests: what was written, from which inputs, with which seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FORMAT: &str = "routekd-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name relative to the output directory.
    pub artifact: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_json: &str) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_owned(),
            version: MANIFEST_VERSION,
            command: command.to_owned(),
            seed,
            config_sha256: sha256_hex(config_json.as_bytes()),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn path(out_dir: &Path, command: &str) -> PathBuf {
        out_dir.join(format!("{command}.manifest.json"))
    }

    pub fn load(out_dir: &Path, command: &str) -> Result<Option<Self>, CliError> {
        let path = Self::path(out_dir, command);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let m: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Some(m))
    }

    pub fn save(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path(out_dir, &self.command);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn output(&self, artifact: &str) -> Option<&FileDigest> {
        self.outputs.iter().find(|o| o.artifact == artifact)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("gen-basic", 3, "{}");
        m.outputs.push(FileDigest {
            artifact: "basic.csv".into(),
            sha256: "00".into(),
            rows: Some(10),
        });
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path(), "gen-basic").unwrap(), Some(m));
        assert_eq!(Manifest::load(dir.path(), "augment").unwrap(), None);
    }
}
