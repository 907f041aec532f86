//! Output directory bookkeeping: every file goes through [`Artifacts`],
//! which hashes it and lists it in `manifest.jsonl`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(Artifacts { root: root.to_path_buf(), entries: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Renders a file into memory with `render`, writes it and records it.
    pub fn write<F>(&mut self, rel: &str, kind: &str, render: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> acoustica_core::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf).map_err(CliError::runtime(format!("writing {rel}")))?;
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        }
        fs::write(&path, &buf).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            kind: kind.to_string(),
            bytes: buf.len() as u64,
            sha256: sha256_hex(&buf),
        });
        Ok(())
    }

    /// Writes `manifest.jsonl`, one entry per line in creation order.
    pub fn finish(self) -> Result<Vec<ManifestEntry>> {
        let mut text = String::new();
        for e in &self.entries {
            text.push_str(&serde_json::to_string(e).expect("entry serializes"));
            text.push('\n');
        }
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        Ok(self.entries)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| CliError::Config { path: path.clone(), message: e.to_string() }))
        .collect()
}

/// Entries whose file is missing or whose hash no longer matches.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for e in read_manifest(dir)? {
        match fs::read(dir.join(&e.path)) {
            Ok(data) if sha256_hex(&data) == e.sha256 && data.len() as u64 == e.bytes => {}
            _ => bad.push(e.path),
        }
    }
    Ok(bad)
}
