//! Run manifest written next to every generated dataset.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tensor::Tensor;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    /// `complex128` for tensor files, `csv` for label tables.
    pub dtype: String,
    /// Tensor dims; for CSV files the number of data rows.
    pub dims: Vec<usize>,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub mode: String,
    /// Wall-clock time of the run; the only field that differs between
    /// repeated runs.
    pub generated_unix: u64,
    pub config_sha256: String,
    pub seed: u64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(mode: &str, config_sha256: String, seed: u64) -> Self {
        let generated_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Manifest {
            version: MANIFEST_VERSION,
            mode: mode.to_string(),
            generated_unix,
            config_sha256,
            seed,
            files: Vec::new(),
        }
    }

    pub fn add_tensor(&mut self, name: &str, tensor: &Tensor, bytes: &[u8]) {
        self.files.push(FileEntry {
            name: name.to_string(),
            dtype: "complex128".to_string(),
            dims: tensor.dims().to_vec(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }

    pub fn add_csv(&mut self, name: &str, rows: usize, bytes: &[u8]) {
        self.files.push(FileEntry {
            name: name.to_string(),
            dtype: "csv".to_string(),
            dims: vec![rows],
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Re-reads every listed file under `dir` and reports mismatches in
    /// size, checksum or declared tensor shape.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        let mut problems = Vec::new();
        for f in &self.files {
            let bytes = match std::fs::read(dir.join(&f.name)) {
                Ok(b) => b,
                Err(e) => {
                    problems.push(format!("{}: {e}", f.name));
                    continue;
                }
            };
            if bytes.len() as u64 != f.bytes {
                problems.push(format!("{}: {} bytes, manifest says {}", f.name, bytes.len(), f.bytes));
            }
            if sha256_hex(&bytes) != f.sha256 {
                problems.push(format!("{}: checksum mismatch", f.name));
            }
            if f.dtype == "complex128" {
                let header = 16 + 8 * f.dims.len();
                let expect = header + 16 * f.dims.iter().product::<usize>();
                if bytes.len() != expect {
                    problems.push(format!(
                        "{}: dims {:?} imply {expect} bytes, file has {}",
                        f.name,
                        f.dims,
                        bytes.len()
                    ));
                }
                match Tensor::read_from(&bytes[..]) {
                    Ok(t) if t.dims() != f.dims.as_slice() => {
                        problems.push(format!("{}: header dims {:?} differ from manifest", f.name, t.dims()))
                    }
                    Ok(_) => {}
                    Err(e) => problems.push(format!("{}: {e}", f.name)),
                }
            }
        }
        problems
    }
}
