//! Monte Carlo grid over regimes, prevalences and replications.

mod drift;
mod stats;

pub use drift::{drift_tests, DriftMode, DriftTest};
pub use stats::{average_ranks, spearman, Spearman, Stats, PERMUTATIONS, PERMUTATION_MAX_N};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{auc, optimize, MetricSpec, ThresholdPath};
use crate::sampler::{
    check_prevalence, derive_seed, draw_regime, plan_sample, prevalence_grid, BetaRegime, PositiveRule, SamplePlan,
    DEFAULT_N_CAP,
};

pub const DEFAULT_AUC_SIZE_CUTOFF: u64 = 1_000_000;
pub const DESK_REPLICATIONS: usize = 200;
pub const FULL_REPLICATIONS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub regimes: Vec<BetaRegime>,
    pub prevalences: Vec<f64>,
    pub replications: usize,
    pub metrics: Vec<MetricSpec>,
    pub master_seed: u64,
    pub n_cap: u64,
    /// AUC is only computed when the simulated sample is smaller than this.
    pub auc_size_cutoff: u64,
    pub positive_rule: PositiveRule,
}

pub fn default_metrics() -> Vec<MetricSpec> {
    vec![
        MetricSpec::F1,
        MetricSpec::Mcc,
        MetricSpec::BalancedAccuracy,
        MetricSpec::Res { alpha: 0.1 },
        MetricSpec::Res { alpha: 0.25 },
        MetricSpec::Res { alpha: 0.5 },
        MetricSpec::Auc,
    ]
}

impl SimConfig {
    /// Reduced grid: 200 replications, prevalence 1e-2 to 1e-4.
    pub fn desk(master_seed: u64) -> Self {
        SimConfig {
            regimes: vec![BetaRegime::MODERATE, BetaRegime::STRONG],
            prevalences: vec![1e-2, 1e-3, 1e-4],
            replications: DESK_REPLICATIONS,
            metrics: default_metrics(),
            master_seed,
            n_cap: DEFAULT_N_CAP,
            auc_size_cutoff: DEFAULT_AUC_SIZE_CUTOFF,
            positive_rule: PositiveRule::default(),
        }
    }

    /// Full grid: 2000 replications down to prevalence 1e-6.
    pub fn full(master_seed: u64) -> Self {
        SimConfig {
            prevalences: prevalence_grid(),
            replications: FULL_REPLICATIONS,
            ..Self::desk(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidParameter("replications must be at least 2".into()));
        }
        if self.regimes.is_empty() || self.prevalences.is_empty() || self.metrics.is_empty() {
            return Err(Error::InvalidParameter("regimes, prevalences and metrics must be nonempty".into()));
        }
        for r in &self.regimes {
            r.validate()?;
        }
        for &pi in &self.prevalences {
            check_prevalence(pi)?;
        }
        for m in &self.metrics {
            m.validate()?;
        }
        if self.n_cap == 0 {
            return Err(Error::InvalidParameter("n_cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn plan(&self, pi: f64) -> Result<SamplePlan> {
        plan_sample(pi, self.positive_rule.positives_for(pi), self.n_cap)
    }

    pub fn replication_seed(&self, regime: usize, pi: usize, rep: usize) -> u64 {
        derive_seed(self.master_seed, &[regime as u64, pi as u64, rep as u64])
    }
}

/// Optimum of one metric in one replication. For AUC `delta_star` is NaN and
/// `value` is NaN when the sample exceeded the AUC size cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOutcome {
    pub delta_star: f64,
    pub value: f64,
}

/// One replication with an outcome per configured metric, in config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub regime: String,
    pub prevalence: f64,
    pub replication: usize,
    pub seed: u64,
    pub n_pos: u64,
    pub n_neg: u64,
    pub neg_weight: f64,
    pub outcomes: Vec<MetricOutcome>,
}

pub fn run_replication(
    regime: &BetaRegime,
    plan: &SamplePlan,
    metrics: &[MetricSpec],
    seed: u64,
    auc_size_cutoff: u64,
) -> Result<Vec<MetricOutcome>> {
    let samples = draw_regime(regime, plan, seed)?;
    let path = ThresholdPath::from_samples(samples)?;
    metrics
        .iter()
        .map(|m| {
            if *m == MetricSpec::Auc {
                let value = if plan.total_simulated() < auc_size_cutoff {
                    auc(&path)
                } else {
                    f64::NAN
                };
                Ok(MetricOutcome { delta_star: f64::NAN, value })
            } else {
                let best = optimize(&path, m)?;
                Ok(MetricOutcome { delta_star: best.delta, value: best.value })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub regime: String,
    pub prevalence: f64,
    pub metric: MetricSpec,
    pub delta: Option<Stats>,
    pub value: Option<Stats>,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub regime: String,
    pub prevalence: f64,
    pub replication: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutput {
    pub metrics: Vec<MetricSpec>,
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<CellSummary>,
    pub failures: Vec<CellFailure>,
}

/// Runs every (regime, prevalence, replication) on the current rayon pool. Output
/// order and content do not depend on the number of workers.
pub fn run_grid(config: &SimConfig) -> Result<GridOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (ri, regime) in config.regimes.iter().enumerate() {
        for (pj, &pi) in config.prevalences.iter().enumerate() {
            let plan = config.plan(pi)?;
            for rep in 0..config.replications {
                jobs.push((ri, regime, pj, plan, rep));
            }
        }
    }

    let results: Vec<(usize, usize, Result<ReplicationRecord>)> = jobs
        .into_par_iter()
        .map(|(ri, regime, pj, plan, rep)| {
            let seed = config.replication_seed(ri, pj, rep);
            let rec = run_replication(regime, &plan, &config.metrics, seed, config.auc_size_cutoff).map(|outcomes| {
                ReplicationRecord {
                    regime: regime.id(),
                    prevalence: plan.prevalence,
                    replication: rep,
                    seed,
                    n_pos: plan.n_pos,
                    n_neg: plan.n_neg_simulated,
                    neg_weight: plan.neg_weight,
                    outcomes,
                }
            });
            (ri, pj, rec)
        })
        .collect();

    let mut records = Vec::with_capacity(results.len());
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    let per_cell = config.replications;
    for cell in results.chunks(per_cell) {
        let (ri, pj) = (cell[0].0, cell[0].1);
        let regime = config.regimes[ri].id();
        let pi = config.prevalences[pj];
        if let Some((rep, err)) = cell
            .iter()
            .enumerate()
            .find_map(|(k, (_, _, r))| r.as_ref().err().map(|e| (k, e)))
        {
            failures.push(CellFailure { regime, prevalence: pi, replication: rep, error: err.to_string() });
            continue;
        }
        let recs: Vec<ReplicationRecord> = cell.iter().map(|(_, _, r)| r.clone().unwrap()).collect();
        summaries.extend(summarize_cell(&regime, pi, &config.metrics, &recs));
        records.extend(recs);
    }
    Ok(GridOutput { metrics: config.metrics.clone(), records, summaries, failures })
}

fn summarize_cell(regime: &str, pi: f64, metrics: &[MetricSpec], recs: &[ReplicationRecord]) -> Vec<CellSummary> {
    metrics
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let deltas: Vec<f64> = recs.iter().map(|r| r.outcomes[k].delta_star).collect();
            let values: Vec<f64> = recs.iter().map(|r| r.outcomes[k].value).collect();
            CellSummary {
                regime: regime.to_string(),
                prevalence: pi,
                metric: *m,
                delta: Stats::of(&deltas),
                value: Stats::of(&values),
                deltas,
                values,
            }
        })
        .collect()
}

impl GridOutput {
    pub fn summary(&self, regime: &str, pi: f64, metric: &MetricSpec) -> Option<&CellSummary> {
        self.summaries
            .iter()
            .find(|s| s.regime == regime && same_pi(s.prevalence, pi) && s.metric == *metric)
    }

    pub fn metric_index(&self, metric: &MetricSpec) -> Option<usize> {
        self.metrics.iter().position(|m| m == metric)
    }

    /// Replication-level optimal thresholds of one metric in one regime, pooled over
    /// all prevalence levels.
    pub fn pooled_deltas(&self, regime: &str, metric: &MetricSpec) -> Vec<f64> {
        let Some(k) = self.metric_index(metric) else {
            return Vec::new();
        };
        self.records
            .iter()
            .filter(|r| r.regime == regime)
            .map(|r| r.outcomes[k].delta_star)
            .collect()
    }

    /// Cell means of the optimal threshold across the prevalence grid, in grid order.
    pub fn cell_mean_deltas(&self, regime: &str, metric: &MetricSpec) -> Vec<(f64, f64)> {
        self.summaries
            .iter()
            .filter(|s| s.regime == regime && s.metric == *metric)
            .filter_map(|s| s.delta.map(|d| (s.prevalence, d.mean)))
            .collect()
    }

    /// Wide raw table: one row per replication, `<metric>_delta` and `<metric>_value`
    /// columns per metric.
    pub fn write_raw_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["regime", "pi", "replication", "seed", "n_pos", "n_neg", "neg_weight"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for m in &self.metrics {
            header.push(format!("{m}_delta"));
            header.push(format!("{m}_value"));
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.regime.clone(),
                fmt_f64(r.prevalence),
                r.replication.to_string(),
                r.seed.to_string(),
                r.n_pos.to_string(),
                r.n_neg.to_string(),
                fmt_f64(r.neg_weight),
            ];
            for o in &r.outcomes {
                row.push(fmt_f64(o.delta_star));
                row.push(fmt_f64(o.value));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "regime",
            "pi",
            "metric",
            "n",
            "mean_delta",
            "sd_delta",
            "cv_delta",
            "min_delta",
            "max_delta",
            "mean_value",
            "sd_value",
            "cv_value",
            "min_value",
            "max_value",
        ])?;
        for s in &self.summaries {
            let mut row = vec![
                s.regime.clone(),
                fmt_f64(s.prevalence),
                s.metric.to_string(),
                s.deltas.len().to_string(),
            ];
            for st in [s.delta, s.value] {
                match st {
                    Some(st) => row.extend([
                        fmt_f64(st.mean),
                        fmt_f64(st.sd),
                        st.cv.map(fmt_f64).unwrap_or_default(),
                        fmt_f64(st.min),
                        fmt_f64(st.max),
                    ]),
                    None => row.extend(std::iter::repeat_n(String::new(), 5)),
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting; NaN becomes an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub(crate) fn same_pi(a: f64, b: f64) -> bool {
    ((a - b) / b).abs() < 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_path, metric_curve, Cut};

    fn small(seed: u64) -> SimConfig {
        SimConfig {
            prevalences: vec![1e-1, 1e-2, 1e-3],
            replications: 8,
            n_cap: 5_000,
            ..SimConfig::desk(seed)
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let plan = plan_sample(1e-2, 100, DEFAULT_N_CAP).unwrap();
        let m = default_metrics();
        let a = run_replication(&BetaRegime::STRONG, &plan, &m, 11, DEFAULT_AUC_SIZE_CUTOFF).unwrap();
        let b = run_replication(&BetaRegime::STRONG, &plan, &m, 11, DEFAULT_AUC_SIZE_CUTOFF).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        let res = a[5];
        assert!(res.delta_star > 0.0 && res.delta_star < 1.0);
        assert!(a[6].value > 0.9 && a[6].delta_star.is_nan());
    }

    #[test]
    fn auc_cutoff_skips_large_samples() {
        let plan = plan_sample(1e-2, 100, DEFAULT_N_CAP).unwrap();
        let out = run_replication(&BetaRegime::MODERATE, &plan, &[MetricSpec::Auc], 1, 1_000).unwrap();
        assert!(out[0].value.is_nan());
    }

    #[test]
    fn f1_matches_brute_force_on_miniature() {
        let plan = plan_sample(0.2, 20, 1_000).unwrap();
        let out = run_replication(&BetaRegime::MODERATE, &plan, &[MetricSpec::F1], 5, 0).unwrap();
        let samples = draw_regime(&BetaRegime::MODERATE, &plan, 5).unwrap();
        assert_eq!(samples.len(), 100);
        let mut best = (1.0, 0.0);
        for t in samples.iter().map(|s| s.score) {
            let tp = samples.iter().filter(|s| s.positive && s.score >= t).count() as f64;
            let fp = samples.iter().filter(|s| !s.positive && s.score >= t).count() as f64;
            let f1 = 2.0 * tp / (2.0 * tp + fp + (20.0 - tp));
            if f1 > best.1 || (f1 == best.1 && t < best.0) {
                best = (t, f1);
            }
        }
        assert_eq!(out[0].delta_star, best.0);
        assert!((out[0].value - best.1).abs() < 1e-15);
        let curve = metric_curve(&build_path(&samples).unwrap(), &MetricSpec::F1).unwrap();
        assert_eq!(curve[0].cut, Cut::NeverAlarm);
    }

    #[test]
    fn grid_shape_and_row_count() {
        let cfg = small(3);
        let out = run_grid(&cfg).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 2 * 3 * 8);
        assert_eq!(out.summaries.len(), 2 * 3 * cfg.metrics.len());
        for s in &out.summaries {
            if let Some(d) = s.delta {
                assert!(d.min <= d.mean && d.mean <= d.max);
            }
        }
        let mut buf = Vec::new();
        out.write_raw_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 48);
        assert!(text.starts_with("regime,pi,replication,seed,n_pos,n_neg,neg_weight,f1_delta,f1_value,"));
    }

    #[test]
    fn grid_is_independent_of_worker_count() {
        let cfg = small(9);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let out = pool.install(|| run_grid(&cfg)).unwrap();
            let mut raw = Vec::new();
            out.write_raw_csv(&mut raw).unwrap();
            let mut summary = Vec::new();
            out.write_summary_csv(&mut summary).unwrap();
            (raw, summary)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn validation() {
        let ok = SimConfig::desk(1);
        assert!(ok.validate().is_ok());
        assert!(SimConfig { regimes: vec![], ..ok.clone() }.validate().is_err());
        assert!(SimConfig { metrics: vec![], ..ok.clone() }.validate().is_err());
        assert!(SimConfig { n_cap: 0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { replications: 1, ..ok.clone() }.validate().is_err());
        assert!(run_grid(&SimConfig { prevalences: vec![0.0], ..ok.clone() }).is_err());
        assert_eq!(SimConfig::full(1).prevalences.len(), 5);
        assert_eq!(SimConfig::full(1).replications, 2000);
    }
}
