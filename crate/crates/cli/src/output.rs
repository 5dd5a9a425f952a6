//! Result files, content hashes and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// One emitted file, held in memory until the run finishes.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub description: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, description: &str, value: &T) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("result records serialize");
        bytes.push(b'\n');
        Self { name: name.into(), description: description.into(), bytes }
    }

    /// CSV with a header row and one record per serialized row.
    pub fn csv<T: Serialize>(name: &str, description: &str, rows: &[T]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).expect("rows serialize");
        }
        Self { name: name.into(), description: description.into(), bytes: w.into_inner().expect("in-memory writer") }
    }

    /// CSV from an explicit header and string records.
    pub fn csv_records(name: &str, description: &str, header: &[String], records: &[Vec<String>]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory writer");
        for r in records {
            w.write_record(r).expect("in-memory writer");
        }
        Self { name: name.into(), description: description.into(), bytes: w.into_inner().expect("in-memory writer") }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub description: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub operation: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// The resolved configuration, seed override applied.
    pub config: serde_json::Value,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub timings: Vec<Timing>,
    pub files: Vec<FileEntry>,
}

/// Writes every artifact into `dir` and returns the file index.
pub fn emit(dir: &Path, artifacts: &[Artifact]) -> io::Result<Vec<FileEntry>> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            write_atomic(&dir.join(&a.name), &a.bytes)?;
            Ok(FileEntry {
                path: a.name.clone(),
                description: a.description.clone(),
                bytes: a.bytes.len(),
                sha256: sha256_hex(&a.bytes),
            })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&dir.join("manifest.json"), &bytes)
}
