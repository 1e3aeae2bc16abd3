use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScoreRecord;
use crate::error::{Error, Result};
use crate::metric::{optimize, MetricSpec, ThresholdPath, WeightedSample};
use crate::sampler::derive_seed;
use crate::sim::{fmt_f64, Stats};

pub const DEFAULT_BOOTSTRAP_REPLICATIONS: usize = 500;
pub const DEFAULT_MAX_REDRAWS: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BootstrapConfig {
    pub replications: usize,
    /// Draw size; `None` uses the number of input records.
    pub sample_size: Option<usize>,
    pub metrics: Vec<MetricSpec>,
    pub master_seed: u64,
    /// Redraws allowed when a resample lacks a class.
    pub max_redraws: u32,
}

impl BootstrapConfig {
    pub fn new(replications: usize, metrics: Vec<MetricSpec>, master_seed: u64) -> Self {
        BootstrapConfig { replications, sample_size: None, metrics, master_seed, max_redraws: DEFAULT_MAX_REDRAWS }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidParameter("bootstrap needs at least 2 replications".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidParameter("bootstrap metric set is empty".into()));
        }
        for m in &self.metrics {
            if !m.is_threshold_metric() {
                return Err(Error::NotThresholdMetric(m.to_string()));
            }
            m.validate()?;
        }
        if self.sample_size == Some(0) {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        Ok(())
    }
}

/// One (replication, metric) optimum. Failed replications carry NaN for both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub replication: usize,
    pub metric: MetricSpec,
    pub delta_star: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BootstrapOutput {
    pub rows: Vec<BootstrapRow>,
    /// Redraws used per replication.
    pub retries: Vec<u32>,
    /// Replications that never produced both classes.
    pub failed: Vec<usize>,
}

impl BootstrapOutput {
    pub fn total_retries(&self) -> u64 {
        self.retries.iter().map(|&r| r as u64).sum()
    }

    pub fn deltas(&self, metric: &MetricSpec) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.metric == *metric && r.delta_star.is_finite())
            .map(|r| r.delta_star)
            .collect()
    }

    pub fn values(&self, metric: &MetricSpec) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.metric == *metric && r.value.is_finite())
            .map(|r| r.value)
            .collect()
    }

    /// `replication,metric,delta_star,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replication", "metric", "delta_star", "value"])?;
        for r in &self.rows {
            w.write_record([r.replication.to_string(), r.metric.to_string(), fmt_f64(r.delta_star), fmt_f64(r.value)])?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Draw {
    Ok(Vec<WeightedSample>, u32),
    Failed(u32),
}

fn draw(records: &[ScoreRecord], size: usize, max_redraws: u32, rng: &mut ChaCha8Rng) -> Draw {
    for attempt in 0..=max_redraws {
        let sample: Vec<WeightedSample> = (0..size)
            .map(|_| records[rng.random_range(0..records.len())].to_sample())
            .collect();
        let pos = sample.iter().filter(|s| s.positive).count();
        if pos > 0 && pos < size {
            return Draw::Ok(sample, attempt);
        }
    }
    Draw::Failed(max_redraws)
}

/// Nonparametric bootstrap of every metric's optimal threshold.
pub fn bootstrap_study(records: &[ScoreRecord], config: &BootstrapConfig) -> Result<BootstrapOutput> {
    config.validate()?;
    if !records.iter().any(|r| r.is_positive()) {
        return Err(Error::EmptyClass("positive"));
    }
    if records.iter().all(|r| r.is_positive()) {
        return Err(Error::EmptyClass("negative"));
    }
    let size = config.sample_size.unwrap_or(records.len());

    let per_rep: Vec<Result<(Vec<BootstrapRow>, u32, bool)>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.master_seed, &[rep as u64]));
            match draw(records, size, config.max_redraws, &mut rng) {
                Draw::Ok(sample, retries) => {
                    let path = ThresholdPath::from_samples(sample)?;
                    let rows = config
                        .metrics
                        .iter()
                        .map(|m| {
                            let best = optimize(&path, m)?;
                            Ok(BootstrapRow { replication: rep, metric: *m, delta_star: best.delta, value: best.value })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((rows, retries, false))
                }
                Draw::Failed(retries) => {
                    let rows = config
                        .metrics
                        .iter()
                        .map(|m| BootstrapRow { replication: rep, metric: *m, delta_star: f64::NAN, value: f64::NAN })
                        .collect();
                    Ok((rows, retries, true))
                }
            }
        })
        .collect();

    let mut out = BootstrapOutput { rows: Vec::new(), retries: Vec::new(), failed: Vec::new() };
    for (rep, r) in per_rep.into_iter().enumerate() {
        let (rows, retries, failed) = r?;
        out.rows.extend(rows);
        out.retries.push(retries);
        if failed {
            out.failed.push(rep);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeStability {
    pub regime: String,
    pub n: usize,
    pub mean_delta: f64,
    pub sd_delta: f64,
    pub cv_delta: Option<f64>,
    pub mean_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricStability {
    pub metric: MetricSpec,
    /// Extremes and range of the per-regime mean thresholds.
    pub min_delta: f64,
    pub max_delta: f64,
    pub range: f64,
    /// CV of all replication-level thresholds pooled across regimes.
    pub cv: f64,
    pub regimes: Vec<RegimeStability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StabilityReport {
    pub metrics: Vec<MetricStability>,
}

/// Aggregates bootstrap tables of several regimes (label, table).
pub fn stability_report(tables: &[(String, BootstrapOutput)]) -> Result<StabilityReport> {
    if tables.len() < 2 {
        return Err(Error::InvalidParameter(format!("stability needs at least 2 regimes, got {}", tables.len())));
    }
    let mut metrics: Vec<MetricSpec> = Vec::new();
    for (_, t) in tables {
        for r in &t.rows {
            if !metrics.contains(&r.metric) {
                metrics.push(r.metric);
            }
        }
    }
    let mut out = Vec::new();
    for m in metrics {
        let mut regimes = Vec::new();
        let mut pooled = Vec::new();
        for (label, t) in tables {
            let d = t.deltas(&m);
            let (Some(ds), Some(vs)) = (Stats::of(&d), Stats::of(&t.values(&m))) else {
                continue;
            };
            pooled.extend_from_slice(&d);
            regimes.push(RegimeStability {
                regime: label.clone(),
                n: ds.n,
                mean_delta: ds.mean,
                sd_delta: ds.sd,
                cv_delta: ds.cv,
                mean_value: vs.mean,
            });
        }
        let means: Vec<f64> = regimes.iter().map(|r| r.mean_delta).collect();
        let (Some(across), Some(all)) = (Stats::of(&means), Stats::of(&pooled)) else {
            return Err(Error::DegenerateInput(format!("{m}: no successful replications")));
        };
        let cv = all
            .cv
            .ok_or_else(|| Error::DegenerateInput(format!("{m}: mean optimal threshold is zero")))?;
        out.push(MetricStability {
            metric: m,
            min_delta: across.min,
            max_delta: across.max,
            range: across.max - across.min,
            cv,
            regimes,
        });
    }
    Ok(StabilityReport { metrics: out })
}
