//! `<out>.manifest.json`: parameters, per-cell timings and output digests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub params: Vec<(String, String)>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyManifest {
    pub command: String,
    pub params: Vec<(String, String)>,
    pub threads: usize,
    pub cells: Vec<CellRecord>,
    pub outputs: Vec<OutputRecord>,
    pub seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl StudyManifest {
    pub fn new(command: &str, params: Vec<(String, String)>, threads: usize) -> StudyManifest {
        StudyManifest {
            command: command.into(),
            params,
            threads,
            cells: Vec::new(),
            outputs: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn add_output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(OutputRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }

    pub fn write(&self, out: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        let p = Self::path_for(out);
        std::fs::write(&p, text + "\n").map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
    }
}
