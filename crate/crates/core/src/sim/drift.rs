use serde::{Deserialize, Serialize};

use super::{same_pi, spearman, GridOutput};
use crate::error::{Error, Result};
use crate::metric::MetricSpec;

/// What gets correlated with `log10(pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftMode {
    /// Every replication's optimal threshold.
    #[default]
    Replication,
    /// One mean per prevalence cell.
    CellMean,
}

/// Spearman test of threshold drift against `log10(pi)` for one metric and regime.
/// `rho` and `p_value` are absent when the input was degenerate; `note` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DriftTest {
    pub metric: MetricSpec,
    pub regime: String,
    pub spearman_rho: Option<f64>,
    pub p_value: Option<f64>,
    pub sample_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn drift_tests(grid: &GridOutput, mode: DriftMode) -> Result<Vec<DriftTest>> {
    let mut levels: Vec<f64> = Vec::new();
    for r in &grid.records {
        if !levels.iter().any(|&p| same_pi(p, r.prevalence)) {
            levels.push(r.prevalence);
        }
    }
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "drift tests need at least 3 prevalence levels, got {}",
            levels.len()
        )));
    }
    let mut regimes: Vec<&str> = Vec::new();
    for r in &grid.records {
        if !regimes.contains(&r.regime.as_str()) {
            regimes.push(&r.regime);
        }
    }

    let mut out = Vec::new();
    for (k, metric) in grid.metrics.iter().enumerate() {
        if !metric.is_threshold_metric() {
            continue;
        }
        for &regime in &regimes {
            let (x, y): (Vec<f64>, Vec<f64>) = match mode {
                DriftMode::Replication => grid
                    .records
                    .iter()
                    .filter(|r| r.regime == regime)
                    .map(|r| (r.prevalence.log10(), r.outcomes[k].delta_star))
                    .filter(|(_, d)| d.is_finite())
                    .unzip(),
                DriftMode::CellMean => grid
                    .cell_mean_deltas(regime, metric)
                    .into_iter()
                    .map(|(pi, d)| (pi.log10(), d))
                    .unzip(),
            };
            let mut test = DriftTest {
                metric: *metric,
                regime: regime.to_string(),
                spearman_rho: None,
                p_value: None,
                sample_count: x.len(),
                note: None,
            };
            match spearman(&x, &y) {
                Ok(s) => {
                    test.spearman_rho = Some(s.rho);
                    test.p_value = Some(s.p_value);
                }
                Err(e @ Error::DegenerateInput(_)) => test.note = Some(e.to_string()),
                Err(e) => return Err(e),
            }
            out.push(test);
        }
    }
    Ok(out)
}
