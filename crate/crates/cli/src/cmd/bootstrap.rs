use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use res_core::empirical::{
    bootstrap_study, build_regime, stability_report, BootstrapConfig, BootstrapOutput, RegimeSpec, ScoreFormat,
    ScoreRecord, StabilityReport, DEFAULT_BOOTSTRAP_REPLICATIONS, DEFAULT_MAX_REDRAWS,
};
use res_core::sampler::{check_prevalence, derive_seed};
use res_core::sim::fmt_f64;

use super::{load_records, parse_format, require_scores, Common};
use crate::config::{load_section, metric_ids, parse_metrics, resolve_seed, SeedSource, DEFAULT_ALPHAS};
use crate::error::ConfigError;
use crate::manifest::Run;

pub const DEFAULT_TARGETS: [f64; 4] = [0.001, 0.005, 0.01, 0.02];

#[derive(Args, Debug, Clone)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scores: Option<String>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<ScoreFormat>,
    /// Target prevalences built by subsampling positives, comma separated
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<f64>>,
    /// Also bootstrap the full set at its own prevalence
    #[arg(long)]
    pub include_natural: Option<bool>,
    /// Bootstrap replications per regime
    #[arg(long)]
    pub reps: Option<usize>,
    /// Resample size; defaults to the regime size
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Threshold metric ids; a bare `res` expands to one metric per --alpha
    #[arg(long)]
    pub metric: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Redraws allowed when a resample misses a class
    #[arg(long)]
    pub max_redraws: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapFile {
    scores: Option<String>,
    format: Option<ScoreFormat>,
    targets: Option<Vec<f64>>,
    include_natural: Option<bool>,
    replications: Option<usize>,
    sample_size: Option<usize>,
    metrics: Option<Vec<String>>,
    alphas: Option<Vec<f64>>,
    seed: Option<u64>,
    max_redraws: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCliConfig {
    pub scores: String,
    pub format: Option<ScoreFormat>,
    pub targets: Vec<f64>,
    pub include_natural: bool,
    pub replications: usize,
    pub sample_size: Option<usize>,
    pub metrics: Vec<String>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub max_redraws: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeRun {
    pub regime: String,
    pub spec: RegimeSpec,
    pub total_retries: u64,
    pub failed_replications: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityFile {
    pub stability: StabilityReport,
    pub regimes: Vec<RegimeRun>,
}

pub fn resolve(args: &BootstrapArgs) -> Result<(BootstrapCliConfig, SeedSource)> {
    let file: BootstrapFile = load_section(args.common.config.as_deref(), "bootstrap")?;
    let (seed, source) = resolve_seed(args.seed, file.seed)?;
    let alphas = args.alpha.clone().or(file.alphas).unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let tokens = if args.metric.is_empty() { file.metrics } else { Some(args.metric.clone()) };
    let tokens = tokens.unwrap_or_else(|| ["f1", "mcc", "ba", "res"].map(String::from).to_vec());
    let config = BootstrapCliConfig {
        scores: require_scores(args.scores.clone().or(file.scores))?,
        format: args.format.or(file.format),
        targets: args.targets.clone().or(file.targets).unwrap_or_else(|| DEFAULT_TARGETS.to_vec()),
        include_natural: args.include_natural.or(file.include_natural).unwrap_or(true),
        replications: args.reps.or(file.replications).unwrap_or(DEFAULT_BOOTSTRAP_REPLICATIONS),
        sample_size: args.sample_size.or(file.sample_size),
        metrics: metric_ids(&parse_metrics(&tokens, &alphas)?),
        alphas,
        seed,
        max_redraws: args.max_redraws.or(file.max_redraws).unwrap_or(DEFAULT_MAX_REDRAWS),
    };
    for &t in &config.targets {
        check_prevalence(t)?;
    }
    let regimes = config.targets.len() + usize::from(config.include_natural);
    if regimes < 2 {
        return Err(ConfigError::Invalid(format!("stability needs at least 2 regimes, got {regimes}")).into());
    }
    study_config(&config, 0)?.validate()?;
    Ok((config, source))
}

fn study_config(config: &BootstrapCliConfig, regime: usize) -> Result<BootstrapConfig> {
    Ok(BootstrapConfig {
        replications: config.replications,
        sample_size: config.sample_size,
        metrics: parse_metrics(&config.metrics, &config.alphas)?,
        master_seed: derive_seed(config.seed, &[1, regime as u64]),
        max_redraws: config.max_redraws,
    })
}

/// Builds every regime, (label, spec, records).
pub fn build_regimes(records: &[ScoreRecord], config: &BootstrapCliConfig) -> Result<Vec<(String, RegimeSpec, Vec<ScoreRecord>)>> {
    let mut out = Vec::new();
    for (j, &t) in config.targets.iter().enumerate() {
        let (spec, rows) = build_regime(records, t, derive_seed(config.seed, &[0, j as u64]))?;
        out.push((fmt_f64(t), spec, rows));
    }
    if config.include_natural {
        let n_pos = records.iter().filter(|r| r.is_positive()).count();
        let n = records.len();
        let pi = n_pos as f64 / n as f64;
        let spec = RegimeSpec {
            target_pi: pi,
            seed: 0,
            n_pos,
            n_neg: n - n_pos,
            n_total: n,
            empirical_pi: pi,
            full_set_fallback: false,
        };
        out.push(("natural".to_string(), spec, records.to_vec()));
    }
    Ok(out)
}

pub fn regimes_csv(regimes: &[(String, RegimeSpec, Vec<ScoreRecord>)]) -> Vec<u8> {
    let mut s = String::from("regime,target_pi,empirical_pi,n,positives,negatives,seed,full_set_fallback\n");
    for (label, spec, _) in regimes {
        s.push_str(&format!(
            "{label},{},{},{},{},{},{},{}\n",
            spec.target_pi, spec.empirical_pi, spec.n_total, spec.n_pos, spec.n_neg, spec.seed, spec.full_set_fallback
        ));
    }
    s.into_bytes()
}

pub fn raw_csv(tables: &[(String, f64, BootstrapOutput)]) -> Vec<u8> {
    let mut s = String::from("regime,target_pi,replication,metric,delta_star,value\n");
    for (label, target, out) in tables {
        for r in &out.rows {
            s.push_str(&format!(
                "{label},{target},{},{},{},{}\n",
                r.replication,
                r.metric,
                fmt_f64(r.delta_star),
                fmt_f64(r.value)
            ));
        }
    }
    s.into_bytes()
}

/// Writes regimes.csv, raw.csv, stability.json and manifest.json.
pub fn run(args: &BootstrapArgs) -> Result<()> {
    let (config, source) = resolve(args)?;
    let mut run = Run::start("bootstrap", &args.common.out)?;
    let records = load_records(&mut run, config.scores.as_ref(), config.format)?;
    let regimes = build_regimes(&records, &config)?;
    run.write("regimes.csv", &regimes_csv(&regimes))?;

    let outputs = regimes
        .par_iter()
        .enumerate()
        .map(|(j, (_, _, rows))| Ok(bootstrap_study(rows, &study_config(&config, j)?)?))
        .collect::<Result<Vec<BootstrapOutput>>>()?;
    let tables: Vec<(String, f64, BootstrapOutput)> = regimes
        .iter()
        .zip(outputs)
        .map(|((label, spec, _), out)| (label.clone(), spec.target_pi, out))
        .collect();
    run.write("raw.csv", &raw_csv(&tables))?;

    let labelled: Vec<(String, BootstrapOutput)> = tables.iter().map(|(l, _, o)| (l.clone(), o.clone())).collect();
    let stability = stability_report(&labelled)?;
    let runs = regimes
        .iter()
        .zip(&tables)
        .map(|((label, spec, _), (_, _, out))| RegimeRun {
            regime: label.clone(),
            spec: spec.clone(),
            total_retries: out.total_retries(),
            failed_replications: out.failed.clone(),
        })
        .collect();
    run.write_json("stability.json", &StabilityFile { stability, regimes: runs })?;
    run.finish(&config, Some((config.seed, source)))?;
    Ok(())
}
