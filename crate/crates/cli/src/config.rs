//! Config files, seed resolution and list parsing shared by every subcommand.
//!
//! Precedence is flag, then config file, then built-in default. The seed has one
//! more layer: flag, config, `RES_SEED`, [`DEFAULT_SEED`].

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use res_core::metric::MetricSpec;
use res_core::sampler::{BetaRegime, DEFAULT_SEED};

use crate::error::ConfigError;

pub const SEED_ENV: &str = "RES_SEED";
pub const COMMANDS: [&str; 5] = ["simulate", "analyze", "evaluate", "bootstrap", "calibrate"];
pub const DEFAULT_ALPHAS: [f64; 3] = [0.1, 0.25, 0.5];

/// Reads the `command` section of a config file.
///
/// A `.json` path is taken to be a manifest from an earlier run, whose resolved
/// config is replayed. Anything else is TOML with one table per subcommand.
pub fn load_section<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let shown = path.display().to_string();
    let fail = |msg: String| ConfigError::File { path: shown.clone(), msg };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;

    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let mut manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        let found = manifest.get("command").and_then(|c| c.as_str()).unwrap_or_default();
        if found != command {
            return Err(fail(format!("manifest is for `{found}`, not `{command}`")).into());
        }
        let config = manifest.get_mut("config").map(serde_json::Value::take).unwrap_or_default();
        return Ok(serde_json::from_value(config).map_err(|e| fail(e.to_string()))?);
    }

    let mut table: toml::Table = toml::from_str(&text).map_err(|e| fail(e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !COMMANDS.contains(&k.as_str())) {
        return Err(fail(format!("unknown section `{key}`")).into());
    }
    match table.remove(command) {
        Some(section) => Ok(section.try_into().map_err(|e: toml::de::Error| fail(e.to_string()))?),
        None => Ok(T::default()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSource {
    Flag,
    Config,
    Env,
    Default,
}

pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<(u64, SeedSource)> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    if let Some(s) = file {
        return Ok((s, SeedSource::Config));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            let s = v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
            Ok((s, SeedSource::Env))
        }
        Err(_) => Ok((DEFAULT_SEED, SeedSource::Default)),
    }
}

/// `moderate,strong` lists presets; a token that is itself four shapes
/// (`5,3,2,8`) is one custom regime.
pub fn parse_regimes(tokens: &[String]) -> Result<Vec<BetaRegime>> {
    let mut out = Vec::new();
    for t in tokens {
        match BetaRegime::parse(t) {
            Ok(r) => out.push(r),
            Err(whole) => {
                if !t.contains(',') {
                    return Err(whole.into());
                }
                for part in t.split(',') {
                    out.push(BetaRegime::parse(part).with_context(|| format!("regime list `{t}`"))?);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid("no regimes given".into()).into());
    }
    Ok(out)
}

/// Parses metric ids; a bare `res` expands to one RES metric per alpha.
pub fn parse_metrics(tokens: &[String], alphas: &[f64]) -> Result<Vec<MetricSpec>> {
    let mut out: Vec<MetricSpec> = Vec::new();
    for t in tokens.iter().flat_map(|t| t.split(',')) {
        let specs = if t.trim().eq_ignore_ascii_case("res") {
            alphas.iter().map(|&a| MetricSpec::res(a)).collect::<res_core::Result<Vec<_>>>()?
        } else {
            vec![t.parse::<MetricSpec>()?]
        };
        for s in specs {
            s.validate()?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid("no metrics given".into()).into());
    }
    Ok(out)
}

pub fn metric_ids(metrics: &[MetricSpec]) -> Vec<String> {
    metrics.iter().map(ToString::to_string).collect()
}
