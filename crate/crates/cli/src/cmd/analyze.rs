use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use res_core::metric::MetricSpec;
use res_core::oracle::{
    analytic_rates, f1_required_lr, implied_tradeoff_curve, likelihood_ratio, res_foc_residual,
    solve_interior_threshold, ImpliedTradeoff, SampleBudget,
};
use res_core::sampler::{check_prevalence, derive_seed, BetaRegime};
use res_core::sim::fmt_f64;

use super::Common;
use crate::config::{load_section, parse_regimes, resolve_seed, SeedSource, DEFAULT_ALPHAS};
use crate::error::ConfigError;
use crate::manifest::Run;

pub const DEFAULT_POINTS: usize = 199;
pub const DEFAULT_TRADEOFF_POSITIVES: u64 = 2_000;
pub const DEFAULT_TRADEOFF_CAP: u64 = 500_000;

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Score regime: moderate, strong or a1,b1,a0,b0 (repeatable)
    #[arg(long)]
    pub regime: Vec<String>,
    /// RES alphas, comma separated
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Prevalences for the F1 curves and the implied trade-offs
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
    /// Interior threshold grid size; curves are evaluated at k/(points+1)
    #[arg(long)]
    pub points: Option<usize>,
    /// Positives per prevalence level in the implied trade-off samples
    #[arg(long)]
    pub tradeoff_positives: Option<u64>,
    /// Negative cap in the implied trade-off samples
    #[arg(long)]
    pub tradeoff_n_cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeFile {
    regimes: Option<Vec<String>>,
    alphas: Option<Vec<f64>>,
    prevalences: Option<Vec<f64>>,
    points: Option<usize>,
    tradeoff_positives: Option<u64>,
    tradeoff_n_cap: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub regimes: Vec<String>,
    pub alphas: Vec<f64>,
    pub prevalences: Vec<f64>,
    pub points: usize,
    pub tradeoff_positives: u64,
    pub tradeoff_n_cap: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Root {
    pub alpha: f64,
    pub delta: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Point {
    pub delta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    pub param: f64,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tradeoff {
    pub metric: MetricSpec,
    pub spread_ratio: f64,
    #[serde(flatten)]
    pub curve: ImpliedTradeoff,
}

/// Everything computed for one regime. Infinite ratios appear as null.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeAnalysis {
    pub regime: String,
    pub shapes: BetaRegime,
    pub degenerate: bool,
    pub roots: Vec<Root>,
    /// `(δ, Λ(δ))`.
    pub likelihood_ratio: Vec<Point>,
    /// Right-hand side of the RES condition, one curve per alpha.
    pub res_rhs: Vec<Curve>,
    /// Likelihood ratio the F1 condition requires, one curve per prevalence.
    pub f1_rhs: Vec<Curve>,
    pub tradeoff: Vec<Tradeoff>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FocReport {
    pub regimes: Vec<RegimeAnalysis>,
}

pub fn resolve(args: &AnalyzeArgs) -> Result<(AnalyzeConfig, SeedSource)> {
    let file: AnalyzeFile = load_section(args.common.config.as_deref(), "analyze")?;
    let (seed, source) = resolve_seed(args.seed, file.seed)?;
    let tokens = if args.regime.is_empty() { file.regimes } else { Some(args.regime.clone()) };
    let regimes = parse_regimes(&tokens.unwrap_or_else(|| vec!["moderate".into(), "strong".into()]))?;
    let config = AnalyzeConfig {
        regimes: regimes.iter().map(BetaRegime::id).collect(),
        alphas: args.alpha.clone().or(file.alphas).unwrap_or_else(|| DEFAULT_ALPHAS.to_vec()),
        prevalences: args.pi.clone().or(file.prevalences).unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]),
        points: args.points.or(file.points).unwrap_or(DEFAULT_POINTS),
        tradeoff_positives: args.tradeoff_positives.or(file.tradeoff_positives).unwrap_or(DEFAULT_TRADEOFF_POSITIVES),
        tradeoff_n_cap: args.tradeoff_n_cap.or(file.tradeoff_n_cap).unwrap_or(DEFAULT_TRADEOFF_CAP),
        seed,
    };
    for &a in &config.alphas {
        MetricSpec::res(a)?;
    }
    for &pi in &config.prevalences {
        check_prevalence(pi)?;
    }
    if config.points == 0 || config.tradeoff_positives == 0 || config.tradeoff_n_cap == 0 {
        return Err(ConfigError::Invalid("points, tradeoff_positives and tradeoff_n_cap must be positive".into()).into());
    }
    Ok((config, source))
}

fn curve(grid: &[f64], f: impl Fn(f64) -> res_core::Result<f64>) -> Vec<Point> {
    grid.iter().map(|&d| Point { delta: d, value: f(d).unwrap_or(f64::NAN) }).collect()
}

pub fn analyze_regime(config: &AnalyzeConfig, index: usize, regime: &BetaRegime) -> Result<RegimeAnalysis> {
    let roots = config
        .alphas
        .iter()
        .map(|&alpha| match solve_interior_threshold(regime, alpha).and_then(|d| res_foc_residual(regime, d, alpha)) {
            Ok(r) => Root { alpha, delta: Some(r.delta), lhs: Some(r.lhs), rhs: Some(r.rhs), residual: Some(r.residual), error: None },
            Err(e) => Root { alpha, delta: None, lhs: None, rhs: None, residual: None, error: Some(e.to_string()) },
        })
        .collect();

    let n = config.points;
    let grid: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
    let res_rhs = config
        .alphas
        .iter()
        .map(|&alpha| Curve {
            param: alpha,
            points: curve(&grid, |d| {
                let (tpr, fpr) = analytic_rates(regime, d)?;
                Ok(alpha * tpr / (alpha * fpr + 1.0 - alpha))
            }),
        })
        .collect();
    let f1_rhs = config
        .prevalences
        .iter()
        .map(|&pi| Curve { param: pi, points: curve(&grid, |d| f1_required_lr(pi, d, regime)) })
        .collect();

    let budget = SampleBudget { n_pos: config.tradeoff_positives, n_cap: config.tradeoff_n_cap };
    let mut metrics: Vec<MetricSpec> = config.alphas.iter().map(|&alpha| MetricSpec::Res { alpha }).collect();
    metrics.push(MetricSpec::F1);
    // every metric sees the same sample at a given prevalence
    let seed = derive_seed(config.seed, &[index as u64]);
    let tradeoff = metrics
        .iter()
        .map(|m| {
            let curve = implied_tradeoff_curve(regime, m, &config.prevalences, budget, seed)?;
            Ok(Tradeoff { metric: *m, spread_ratio: curve.spread_ratio(), curve })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RegimeAnalysis {
        regime: regime.id(),
        shapes: *regime,
        degenerate: regime.is_degenerate(),
        roots,
        likelihood_ratio: curve(&grid, |d| likelihood_ratio(regime, d)),
        res_rhs,
        f1_rhs,
        tradeoff,
    })
}

/// Tidy plot data: one row per (regime, curve, parameter, δ).
pub fn curves_csv(report: &FocReport) -> Vec<u8> {
    let mut s = String::from("regime,curve,param,delta,value\n");
    for r in &report.regimes {
        for p in &r.likelihood_ratio {
            s.push_str(&format!("{},lambda,,{},{}\n", r.regime, p.delta, fmt_f64(p.value)));
        }
        for (name, curves) in [("res_rhs", &r.res_rhs), ("f1_rhs", &r.f1_rhs)] {
            for c in curves.iter() {
                for p in &c.points {
                    s.push_str(&format!("{},{name},{},{},{}\n", r.regime, c.param, p.delta, fmt_f64(p.value)));
                }
            }
        }
    }
    s.into_bytes()
}

/// Quote-free regime ids keep the CSV simple; custom ids contain commas.
fn csv_safe(id: &str) -> String {
    id.replace(',', ";")
}

/// Writes foc.json, foc_curves.csv and manifest.json.
pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let (config, source) = resolve(args)?;
    let regimes = parse_regimes(&config.regimes)?;
    let mut run = Run::start("analyze", &args.common.out)?;
    let analyses = regimes
        .par_iter()
        .enumerate()
        .map(|(k, r)| analyze_regime(&config, k, r))
        .collect::<Result<Vec<_>>>()?;
    let mut report = FocReport { regimes: analyses };
    run.write_json("foc.json", &report)?;
    for r in &mut report.regimes {
        r.regime = csv_safe(&r.regime);
    }
    run.write("foc_curves.csv", &curves_csv(&report))?;
    run.finish(&config, Some((config.seed, source)))?;
    Ok(())
}
