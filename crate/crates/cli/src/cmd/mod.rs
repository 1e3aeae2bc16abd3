pub mod analyze;
pub mod bootstrap;
pub mod calibrate;
pub mod evaluate;
pub mod simulate;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use res_core::empirical::{read_scores, ScoreFormat, ScoreRecord};

use crate::error::ConfigError;
use crate::manifest::Run;

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML config file, or the manifest.json of an earlier run to replay it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

/// Parses `csv` or `jsonl`.
pub fn parse_format(s: &str) -> Result<ScoreFormat, String> {
    s.parse::<ScoreFormat>().map_err(|e| e.to_string())
}

pub fn require_scores(scores: Option<String>) -> Result<String> {
    scores.ok_or_else(|| ConfigError::Invalid("a scores file is required (--scores)".into()).into())
}

/// Reads and digests the scores file, then parses it.
pub fn load_records(run: &mut Run, path: &Path, format: Option<ScoreFormat>) -> Result<Vec<ScoreRecord>> {
    let bytes = run.input(path)?;
    let format = format.unwrap_or_else(|| ScoreFormat::from_path(path));
    read_scores(bytes.as_slice(), format).with_context(|| format!("parsing {}", path.display()))
}

pub fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> res_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}
