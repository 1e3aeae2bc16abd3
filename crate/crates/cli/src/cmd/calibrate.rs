use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use res_core::calibrate::{calibrate, AlphaGrid, CalibrationTarget};
use res_core::empirical::{to_samples, ScoreFormat};

use super::{load_records, parse_format, require_scores, Common};
use crate::config::load_section;
use crate::error::ConfigError;
use crate::manifest::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// alpha = cFP / (cFP + cFN); needs no data
    Cost,
    /// reproduce a historical threshold
    Historical,
    /// reproduce a target alarm rate
    Rate,
    /// match the cost-minimising threshold
    Loss,
}

#[derive(Args, Debug, Clone)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Cost of a false positive (cost, loss)
    #[arg(long)]
    pub cfp: Option<f64>,
    /// Cost of a false negative (cost, loss)
    #[arg(long)]
    pub cfn: Option<f64>,
    /// Historical threshold (historical)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Target alarm rate in (0, 1) (rate)
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub scores: Option<String>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<ScoreFormat>,
    /// Alpha grid k/n for k=1..n; default n=1000
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateFile {
    mode: Option<Mode>,
    c_fp: Option<f64>,
    c_fn: Option<f64>,
    delta: Option<f64>,
    target: Option<f64>,
    scores: Option<String>,
    format: Option<ScoreFormat>,
    grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub mode: Mode,
    pub c_fp: Option<f64>,
    pub c_fn: Option<f64>,
    pub delta: Option<f64>,
    pub target: Option<f64>,
    pub scores: Option<String>,
    pub format: Option<ScoreFormat>,
    pub grid: usize,
}

fn need(v: Option<f64>, flag: &str, mode: Mode) -> Result<f64> {
    v.ok_or_else(|| ConfigError::Invalid(format!("--{flag} is required in {mode:?} mode").to_lowercase()).into())
}

pub fn resolve(args: &CalibrateArgs) -> Result<(CalibrateConfig, CalibrationTarget)> {
    let file: CalibrateFile = load_section(args.common.config.as_deref(), "calibrate")?;
    let mode = args.mode.or(file.mode).ok_or_else(|| ConfigError::Invalid("--mode is required".into()))?;
    let c_fp = args.cfp.or(file.c_fp);
    let c_fn = args.cfn.or(file.c_fn);
    let delta = args.delta.or(file.delta);
    let rate = args.target.or(file.target);
    let target = match mode {
        Mode::Cost => CalibrationTarget::CostBased { c_fp: need(c_fp, "cfp", mode)?, c_fn: need(c_fn, "cfn", mode)? },
        Mode::Loss => CalibrationTarget::LossBased { c_fp: need(c_fp, "cfp", mode)?, c_fn: need(c_fn, "cfn", mode)? },
        Mode::Historical => CalibrationTarget::HistoricalThreshold { delta_hist: need(delta, "delta", mode)? },
        Mode::Rate => CalibrationTarget::InterventionRate { r_target: need(rate, "target", mode)? },
    };
    target.validate()?;
    let grid = args.grid.or(file.grid).unwrap_or(1000);
    AlphaGrid::uniform(grid)?;
    let scores = args.scores.clone().or(file.scores);
    let scores = if target.needs_data() { Some(require_scores(scores)?) } else { scores };
    // keep only what the mode reads, so a replayed manifest says what mattered
    let (c_fp, c_fn) = if matches!(mode, Mode::Cost | Mode::Loss) { (c_fp, c_fn) } else { (None, None) };
    let config = CalibrateConfig {
        mode,
        c_fp,
        c_fn,
        delta: delta.filter(|_| mode == Mode::Historical),
        target: rate.filter(|_| mode == Mode::Rate),
        format: args.format.or(file.format).filter(|_| target.needs_data()),
        scores: scores.filter(|_| target.needs_data()),
        grid,
    };
    Ok((config, target))
}

/// Writes calibration.json and manifest.json.
pub fn run(args: &CalibrateArgs) -> Result<()> {
    let (config, target) = resolve(args)?;
    let mut run = Run::start("calibrate", &args.common.out)?;
    let samples = match &config.scores {
        Some(path) => to_samples(&load_records(&mut run, path.as_ref(), config.format)?),
        None => Vec::new(),
    };
    let report = calibrate(&target, &samples, &AlphaGrid::uniform(config.grid)?)?;
    run.write_json("calibration.json", &report)?;
    run.finish(&config, None)?;
    Ok(())
}
