//! Run directories and machine-readable reports.
//!
//! Every experiment writes one directory containing `config.json`,
//! `report.json`, `report.csv`, and any image artifacts. The directory name
//! is derived from the command and the content hash of the serialized
//! config, so identical configurations land in identical places and can be
//! diffed across runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of a byte string.
pub fn content_hash_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of a file's contents.
pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(content_hash_hex(&bytes))
}

/// Writer for one run directory.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
}

impl RunWriter {
    /// Create (or reuse) `root/<command>-<hash8>` for the given config.
    pub fn create(root: &Path, command: &str, config: &impl Serialize) -> Result<Self> {
        let config_json = serde_json::to_vec_pretty(config)?;
        let hash = content_hash_hex(&config_json);
        let dir = root.join(format!("{command}-{}", &hash[..8]));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let config_path = dir.join("config.json");
        fs::write(&config_path, &config_json).map_err(|e| Error::io(&config_path, e))?;
        Ok(RunWriter { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let bytes = serde_json::to_vec_pretty(value)?;
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(file, "{}", header.join(",")).map_err(|e| Error::io(&path, e))?;
        for row in rows {
            writeln!(file, "{}", row.join(",")).map_err(|e| Error::io(&path, e))?;
        }
        Ok(path)
    }
}
