//! Run manifest: every output is registered before it is written, and the
//! manifest itself is replaced atomically so an interrupted run leaves a
//! parsable partial record.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    /// Hex SHA-256 of the content; absent until the write completes.
    pub sha256: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub steps: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub failures: Vec<String>,
    pub complete: bool,
    pub timing: Timing,
    #[serde(skip)]
    dir: PathBuf,
    #[serde(skip)]
    started: Instant,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(dir: &Path, command: &str, seed: u64, config: serde_json::Value) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let m = Self {
            schema_version: pag_core::io::SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            failures: Vec::new(),
            complete: false,
            timing: Timing {
                total_ms: 0.0,
                steps: Vec::new(),
            },
            dir: dir.to_path_buf(),
            started: Instant::now(),
        };
        m.flush()?;
        Ok(m)
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileRecord {
            path: path.display().to_string(),
            sha256: Some(sha256_hex(bytes)),
        });
    }

    pub fn step(&mut self, name: &str, since: Instant) {
        self.timing.steps.push((name.to_string(), since.elapsed().as_secs_f64() * 1e3));
    }

    /// Registers `name` under the output directory, writes it and records its digest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.outputs.push(FileRecord {
            path: name.to_string(),
            sha256: None,
        });
        self.flush()?;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.last_mut().expect("just registered").sha256 = Some(sha256_hex(bytes));
        self.flush()?;
        Ok(path)
    }

    pub fn finish(mut self) -> Result<()> {
        self.complete = true;
        self.timing.total_ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.flush()
    }

    fn flush(&self) -> Result<()> {
        let tmp = self.dir.join(format!("{MANIFEST_NAME}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        fs::rename(&tmp, self.dir.join(MANIFEST_NAME))?;
        Ok(())
    }
}
