//! Atomic file output and run manifests.

use crate::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// File name relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// The merged configuration (defaults, then config file, then flags).
    pub config: serde_json::Value,
    /// Master seed; `None` for deterministic commands.
    pub seed: Option<u64>,
    pub outputs: Vec<OutputFile>,
    pub duration_secs: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one run under a single directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(format!("cannot create {}", root.display()), e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[OutputFile] {
        &self.written
    }

    /// Write `bytes` to `name` through a temporary file in the same directory,
    /// so readers never observe a partial file.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.root.join(name);
        write_atomic(&target, bytes)?;
        self.written.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(target)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let bytes = csv_bytes(rows)?;
        self.write(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Finish the run: the manifest lists every file written so far.
    pub fn write_manifest(
        &self,
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
        elapsed: Duration,
    ) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            outputs: self.written.clone(),
            duration_secs: elapsed.as_secs_f64(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::internal(e.to_string()))?;
        bytes.push(b'\n');
        let target = self.root.join(format!("{command}.manifest.json"));
        write_atomic(&target, &bytes)?;
        Ok(target)
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| CliError::internal(e.to_string()))?;
    }
    writer.into_inner().map_err(|e| CliError::internal(e.to_string()))
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::io(format!("cannot write {}", target.display()), e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(target).map_err(|e| fail(e.error))?;
    Ok(())
}
