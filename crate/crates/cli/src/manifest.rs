use std::path::{Path, PathBuf};

use cascade_ldp::io::write_json_file;
use cascade_ldp::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ConfigEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Option<ConfigEntry>,
    pub params: serde_json::Value,
    pub seeds: Vec<u64>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = std::fs::read(path)?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

impl Manifest {
    /// Hashes every listed file and writes `manifest.json` into `out`.
    pub fn write(mut self, out: &Path, files: &[PathBuf]) -> Result<PathBuf> {
        for f in files {
            let (bytes, sha256) = sha256_file(f)?;
            let rel = f.strip_prefix(out).unwrap_or(f);
            self.files.push(FileEntry { path: rel.display().to_string(), bytes, sha256 });
        }
        write_json_file(&out.join("manifest.json"), &self)
    }
}
