use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use res_core::sampler::{PositiveRule, DEFAULT_N_CAP};
use res_core::sim::{
    default_metrics, drift_tests, run_grid, DriftMode, DriftTest, SimConfig, DEFAULT_AUC_SIZE_CUTOFF,
};

use super::{csv_bytes, Common};
use crate::config::{load_section, metric_ids, parse_metrics, parse_regimes, resolve_seed, DEFAULT_ALPHAS};
use crate::error::ConfigError;
use crate::manifest::Run;

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Score regime: moderate, strong or a1,b1,a0,b0 (repeatable, comma list of presets allowed)
    #[arg(long)]
    pub regime: Vec<String>,
    /// Prevalence grid, comma separated
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
    /// Replications per cell
    #[arg(long)]
    pub reps: Option<usize>,
    /// Metric ids (f1, mcc, ba, accuracy, fbeta:B, res, res:A, genres:A:G, cost:CFP:CFN, auc)
    #[arg(long)]
    pub metric: Vec<String>,
    /// Alphas that a bare `res` expands to
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Most negatives simulated per replication; beyond it negatives are weighted
    #[arg(long)]
    pub n_cap: Option<u64>,
    /// AUC is skipped for samples of at least this many rows
    #[arg(long)]
    pub auc_cutoff: Option<u64>,
    /// Positives drawn at prevalence exactly 1e-5
    #[arg(long)]
    pub boundary_positives: Option<u64>,
    /// replication or cell-mean
    #[arg(long, value_parser = parse_drift_mode)]
    pub drift_mode: Option<DriftMode>,
    /// Full grid: prevalence down to 1e-6 and 2000 replications unless overridden
    #[arg(long)]
    pub full: bool,
}

fn parse_drift_mode(s: &str) -> Result<DriftMode, String> {
    match s {
        "replication" => Ok(DriftMode::Replication),
        "cell-mean" => Ok(DriftMode::CellMean),
        _ => Err(format!("expected `replication` or `cell-mean`, got `{s}`")),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    regimes: Option<Vec<String>>,
    prevalences: Option<Vec<f64>>,
    replications: Option<usize>,
    metrics: Option<Vec<String>>,
    alphas: Option<Vec<f64>>,
    seed: Option<u64>,
    n_cap: Option<u64>,
    auc_size_cutoff: Option<u64>,
    boundary_positives: Option<u64>,
    drift_mode: Option<DriftMode>,
    full: Option<bool>,
}

/// Resolved settings, recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub regimes: Vec<String>,
    pub prevalences: Vec<f64>,
    pub replications: usize,
    pub metrics: Vec<String>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub n_cap: u64,
    pub auc_size_cutoff: u64,
    pub boundary_positives: u64,
    pub drift_mode: DriftMode,
    pub full: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct DriftReport {
    mode: DriftMode,
    tests: Vec<DriftTest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    failures: Vec<res_core::sim::CellFailure>,
}

pub fn resolve(args: &SimulateArgs) -> Result<(SimulateConfig, SimConfig, crate::config::SeedSource)> {
    let file: SimulateFile = load_section(args.common.config.as_deref(), "simulate")?;
    let (seed, source) = resolve_seed(args.seed, file.seed)?;
    let full = args.full || file.full.unwrap_or(false);
    let base = if full { SimConfig::full(seed) } else { SimConfig::desk(seed) };

    let regime_tokens = if args.regime.is_empty() { file.regimes.clone() } else { Some(args.regime.clone()) };
    let regimes = match regime_tokens {
        Some(t) => parse_regimes(&t)?,
        None => base.regimes.clone(),
    };
    let alphas = args.alpha.clone().or(file.alphas).unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let metric_tokens = if args.metric.is_empty() { file.metrics } else { Some(args.metric.clone()) };
    let metrics = match metric_tokens {
        Some(t) => parse_metrics(&t, &alphas)?,
        None => {
            // the default set with its RES entries replaced by the chosen alphas
            let mut ids: Vec<String> = default_metrics()
                .iter()
                .filter(|m| !matches!(m, res_core::metric::MetricSpec::Res { .. }))
                .map(ToString::to_string)
                .collect();
            ids.insert(3, "res".into());
            parse_metrics(&ids, &alphas)?
        }
    };
    let rule = PositiveRule {
        at_boundary: args.boundary_positives.or(file.boundary_positives).unwrap_or(PositiveRule::default().at_boundary),
    };
    let sim = SimConfig {
        regimes,
        prevalences: args.pi.clone().or(file.prevalences).unwrap_or(base.prevalences),
        replications: args.reps.or(file.replications).unwrap_or(base.replications),
        metrics,
        master_seed: seed,
        n_cap: args.n_cap.or(file.n_cap).unwrap_or(DEFAULT_N_CAP),
        auc_size_cutoff: args.auc_cutoff.or(file.auc_size_cutoff).unwrap_or(DEFAULT_AUC_SIZE_CUTOFF),
        positive_rule: rule,
    };
    sim.validate()?;
    for (k, &pi) in sim.prevalences.iter().enumerate() {
        if sim.prevalences[..k].iter().any(|&q| ((q - pi) / pi).abs() < 1e-9) {
            return Err(ConfigError::Invalid(format!("prevalence {pi} listed twice")).into());
        }
        sim.plan(pi)?;
    }
    for (k, r) in sim.regimes.iter().enumerate() {
        if sim.regimes[..k].contains(r) {
            return Err(ConfigError::Invalid(format!("regime {} listed twice", r.id())).into());
        }
    }
    let resolved = SimulateConfig {
        regimes: sim.regimes.iter().map(|r| r.id()).collect(),
        prevalences: sim.prevalences.clone(),
        replications: sim.replications,
        metrics: metric_ids(&sim.metrics),
        alphas,
        seed,
        n_cap: sim.n_cap,
        auc_size_cutoff: sim.auc_size_cutoff,
        boundary_positives: rule.at_boundary,
        drift_mode: args.drift_mode.or(file.drift_mode).unwrap_or_default(),
        full,
    };
    Ok((resolved, sim, source))
}

/// Writes raw.csv, summary.csv, drift.json and manifest.json. Cells whose
/// replications failed are reported in drift.json and turn the exit code to 3.
pub fn run(args: &SimulateArgs) -> Result<()> {
    let (resolved, sim, source) = resolve(args)?;
    let mut run = Run::start("simulate", &args.common.out)?;
    let grid = run_grid(&sim)?;

    run.write("raw.csv", &csv_bytes(|b| grid.write_raw_csv(b))?)?;
    run.write("summary.csv", &csv_bytes(|b| grid.write_summary_csv(b))?)?;
    let levels = grid.summaries.iter().map(|s| s.prevalence).fold(Vec::<f64>::new(), |mut v, p| {
        if !v.contains(&p) {
            v.push(p);
        }
        v
    });
    let (tests, note) = if levels.len() >= 3 {
        (drift_tests(&grid, resolved.drift_mode)?, None)
    } else {
        (Vec::new(), Some(format!("drift tests need 3 prevalence levels, got {}", levels.len())))
    };
    let failed = !grid.failures.is_empty();
    run.write_json(
        "drift.json",
        &DriftReport { mode: resolved.drift_mode, tests, note, failures: grid.failures.clone() },
    )?;
    run.finish(&resolved, Some((resolved.seed, source)))?;
    if failed {
        let f = &grid.failures[0];
        anyhow::bail!(
            "{} cell(s) failed; first: {} pi={} replication {}: {}",
            grid.failures.len(),
            f.regime,
            f.prevalence,
            f.replication,
            f.error
        );
    }
    Ok(())
}
