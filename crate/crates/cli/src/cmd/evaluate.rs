use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use res_core::empirical::{to_samples, ScoreFormat};
use res_core::metric::{auc, metric_curve, optimize, Cut, MetricSpec, ThresholdPath};
use res_core::sim::fmt_f64;

use super::{load_records, parse_format, require_scores, Common};
use crate::config::{load_section, metric_ids, parse_metrics, DEFAULT_ALPHAS};
use crate::manifest::Run;

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scores file with `score,label[,id]` columns (CSV) or objects (JSON lines)
    #[arg(long)]
    pub scores: Option<String>,
    /// csv or jsonl; guessed from the extension when absent
    #[arg(long, value_parser = parse_format)]
    pub format: Option<ScoreFormat>,
    /// Metric ids; a bare `res` expands to one metric per --alpha
    #[arg(long)]
    pub metric: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Also export the metric at every cut
    #[arg(long)]
    pub curve: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateFile {
    scores: Option<String>,
    format: Option<ScoreFormat>,
    metrics: Option<Vec<String>>,
    alphas: Option<Vec<f64>>,
    curve: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub scores: String,
    pub format: Option<ScoreFormat>,
    pub metrics: Vec<String>,
    pub alphas: Vec<f64>,
    pub curve: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurveRow {
    pub threshold: f64,
    pub alarm_rate: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricResult {
    pub metric: MetricSpec,
    pub value: f64,
    /// Absent for AUC. 1.0 with `neverAlarm` set is the flag-nothing cut.
    pub delta_star: Option<f64>,
    pub never_alarm: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<CurveRow>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputSummary {
    pub records: usize,
    pub positives: f64,
    pub negatives: f64,
    pub prevalence: f64,
    pub distinct_scores: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub input: InputSummary,
    pub metrics: Vec<MetricResult>,
}

pub fn resolve(args: &EvaluateArgs) -> Result<EvaluateConfig> {
    let file: EvaluateFile = load_section(args.common.config.as_deref(), "evaluate")?;
    let alphas = args.alpha.clone().or(file.alphas).unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let tokens = if args.metric.is_empty() { file.metrics } else { Some(args.metric.clone()) };
    let tokens = tokens.unwrap_or_else(|| ["f1", "mcc", "ba", "res", "auc"].map(String::from).to_vec());
    Ok(EvaluateConfig {
        scores: require_scores(args.scores.clone().or(file.scores))?,
        format: args.format.or(file.format),
        metrics: metric_ids(&parse_metrics(&tokens, &alphas)?),
        alphas,
        curve: args.curve || file.curve.unwrap_or(false),
    })
}

pub fn evaluate(path: &ThresholdPath, metrics: &[MetricSpec], with_curve: bool) -> Result<Vec<MetricResult>> {
    metrics
        .iter()
        .map(|m| {
            if *m == MetricSpec::Auc {
                return Ok(MetricResult { metric: *m, value: auc(path), delta_star: None, never_alarm: false, curve: None });
            }
            let best = optimize(path, m)?;
            let curve = if with_curve {
                let rows = metric_curve(path, m)?
                    .into_iter()
                    .map(|c| Ok(CurveRow { threshold: c.threshold, alarm_rate: path.alarm_rate(c.cut)?, value: c.value }))
                    .collect::<res_core::Result<Vec<_>>>()?;
                Some(rows)
            } else {
                None
            };
            Ok(MetricResult {
                metric: *m,
                value: best.value,
                delta_star: Some(best.delta),
                never_alarm: best.cut == Cut::NeverAlarm,
                curve,
            })
        })
        .collect()
}

/// Writes metrics.json (and curves.csv with --curve) plus manifest.json.
pub fn run(args: &EvaluateArgs) -> Result<()> {
    let config = resolve(args)?;
    let metrics = parse_metrics(&config.metrics, &config.alphas)?;
    let mut run = Run::start("evaluate", &args.common.out)?;
    let records = load_records(&mut run, config.scores.as_ref(), config.format)?;
    let path = ThresholdPath::from_samples(to_samples(&records))?;
    let results = evaluate(&path, &metrics, config.curve)?;
    let input = InputSummary {
        records: records.len(),
        positives: path.total_pos(),
        negatives: path.total_neg(),
        prevalence: path.prevalence(),
        distinct_scores: path.len(),
    };
    if config.curve {
        let mut s = String::from("metric,threshold,alarm_rate,value\n");
        for r in &results {
            for c in r.curve.iter().flatten() {
                s.push_str(&format!("{},{},{},{}\n", r.metric, c.threshold, c.alarm_rate, fmt_f64(c.value)));
            }
        }
        run.write("curves.csv", s.as_bytes())?;
    }
    run.write_json("metrics.json", &MetricsReport { input, metrics: results })?;
    run.finish(&config, None)?;
    Ok(())
}
