use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SeedSource;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: impl Into<String>, bytes: &[u8]) -> Self {
        FileDigest { path: path.into(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

/// Written next to the outputs of every run. Passing it back as `--config`
/// replays the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub seed_source: Option<SeedSource>,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

/// Collects inputs and outputs of one command while it runs.
pub struct Run {
    command: &'static str,
    out_dir: PathBuf,
    started_at: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Run {
    pub fn start(command: &'static str, out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Run { command, out_dir: out_dir.to_path_buf(), started_at: now(), inputs: Vec::new(), outputs: Vec::new() })
    }

    /// Reads an input file whole and records its digest.
    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest::of(path.display().to_string(), &bytes));
        Ok(bytes)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileDigest::of(name, bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn finish<C: Serialize>(self, config: &C, seed: Option<(u64, SeedSource)>) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            config: serde_json::to_value(config)?,
            seed: seed.map(|s| s.0),
            seed_source: seed.map(|s| s.1),
            threads: rayon::current_num_threads(),
            inputs: self.inputs,
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: now(),
        };
        let path = self.out_dir.join(MANIFEST);
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}
