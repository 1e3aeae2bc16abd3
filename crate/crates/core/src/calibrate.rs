//! Mapping institutional policy targets to the RES policy parameter α.
//!
//! Every data-driven mode searches an [`AlphaGrid`] exhaustively: on a finite sample
//! `δ*(α)` is a step function, so a grid scan is exact up to grid resolution. Ties
//! in the objective go to the smaller α. A solution on the first or last grid point
//! is returned with [`CalibrationFlag::EdgeSolution`], since it usually means the
//! target is unattainable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{optimize, MetricSpec, ThresholdPath, WeightedSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    values: Vec<f64>,
}

impl Default for AlphaGrid {
    /// 0.001, 0.002, ..., 0.999.
    fn default() -> Self {
        AlphaGrid { values: (1..1000).map(|k| k as f64 / 1000.0).collect() }
    }
}

impl AlphaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("alpha grid is empty".into()));
        }
        if values.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::InvalidParameter("alpha grid values must lie in (0, 1)".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("alpha grid must be strictly increasing".into()));
        }
        Ok(AlphaGrid { values })
    }

    /// `k / n` for `k = 1..n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("uniform alpha grid needs n >= 2".into()));
        }
        Self::new((1..n).map(|k| k as f64 / n as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest gap between neighbouring grid points.
    pub fn max_step(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "camelCase")]
pub enum CalibrationTarget {
    #[serde(rename_all = "camelCase")]
    CostBased { c_fp: f64, c_fn: f64 },
    #[serde(rename_all = "camelCase")]
    HistoricalThreshold { delta_hist: f64 },
    #[serde(rename_all = "camelCase")]
    InterventionRate { r_target: f64 },
    #[serde(rename_all = "camelCase")]
    LossBased { c_fp: f64, c_fn: f64 },
}

impl CalibrationTarget {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CalibrationTarget::CostBased { c_fp, c_fn } | CalibrationTarget::LossBased { c_fp, c_fn } => {
                MetricSpec::cost_loss(c_fp, c_fn).map(|_| ())
            }
            CalibrationTarget::HistoricalThreshold { delta_hist } => open_unit("historical threshold", delta_hist),
            CalibrationTarget::InterventionRate { r_target } => open_unit("target rate", r_target),
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            CalibrationTarget::CostBased { .. } => "cost",
            CalibrationTarget::HistoricalThreshold { .. } => "historical",
            CalibrationTarget::InterventionRate { .. } => "rate",
            CalibrationTarget::LossBased { .. } => "loss",
        }
    }

    pub fn needs_data(&self) -> bool {
        !matches!(self, CalibrationTarget::CostBased { .. })
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} {v} must lie in (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationFlag {
    EdgeSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalibrationReport {
    pub mode: String,
    pub alpha_hat: f64,
    /// `δ*(alpha_hat)`; absent for the data-free cost mode.
    pub induced_delta: Option<f64>,
    /// Distance between what `alpha_hat` induces and the target (0 for cost mode).
    pub objective: f64,
    pub flags: Vec<CalibrationFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub induced_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_loss: Option<f64>,
}

impl CalibrationReport {
    pub fn is_edge(&self) -> bool {
        self.flags.contains(&CalibrationFlag::EdgeSolution)
    }
}

/// `c_fp / (c_fp + c_fn)`.
pub fn calibrate_cost(c_fp: f64, c_fn: f64) -> Result<f64> {
    MetricSpec::cost_loss(c_fp, c_fn)?;
    Ok(c_fp / (c_fp + c_fn))
}

/// RES-optimal cut for every α in the grid, in grid order.
pub fn threshold_profile(path: &ThresholdPath, grid: &AlphaGrid) -> Result<Vec<(f64, f64)>> {
    grid.values
        .par_iter()
        .map(|&alpha| {
            let best = optimize(path, &MetricSpec::Res { alpha })?;
            Ok((best.delta, path.alarm_rate(best.cut)?))
        })
        .collect()
}

/// First grid index minimising `objective`; strict `<` keeps the smaller α on ties.
fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) })
}

fn edge_flags(idx: usize, grid: &AlphaGrid) -> Vec<CalibrationFlag> {
    if idx == 0 || idx + 1 == grid.len() {
        vec![CalibrationFlag::EdgeSolution]
    } else {
        Vec::new()
    }
}

fn historical_on_path(path: &ThresholdPath, delta_hist: f64, grid: &AlphaGrid, mode: &str) -> Result<CalibrationReport> {
    let profile = threshold_profile(path, grid)?;
    let (idx, objective) = argmin(profile.iter().map(|(d, _)| (d - delta_hist).abs()));
    Ok(CalibrationReport {
        mode: mode.into(),
        alpha_hat: grid.values[idx],
        induced_delta: Some(profile[idx].0),
        objective,
        flags: edge_flags(idx, grid),
        induced_rate: Some(profile[idx].1),
        delta_loss: None,
    })
}

pub fn calibrate_historical(samples: &[WeightedSample], delta_hist: f64, grid: &AlphaGrid) -> Result<CalibrationReport> {
    CalibrationTarget::HistoricalThreshold { delta_hist }.validate()?;
    let path = ThresholdPath::build(samples)?;
    historical_on_path(&path, delta_hist, grid, "historical")
}

/// Matches the weighted alarm rate `r(α)` at the RES optimum to `r_target`.
pub fn calibrate_rate(samples: &[WeightedSample], r_target: f64, grid: &AlphaGrid) -> Result<CalibrationReport> {
    CalibrationTarget::InterventionRate { r_target }.validate()?;
    let path = ThresholdPath::build(samples)?;
    let profile = threshold_profile(&path, grid)?;
    let (idx, objective) = argmin(profile.iter().map(|(_, r)| (r - r_target).abs()));
    Ok(CalibrationReport {
        mode: "rate".into(),
        alpha_hat: grid.values[idx],
        induced_delta: Some(profile[idx].0),
        objective,
        flags: edge_flags(idx, grid),
        induced_rate: Some(profile[idx].1),
        delta_loss: None,
    })
}

/// Finds the cost-loss optimal cut, then the α whose RES optimum is closest to it.
pub fn calibrate_loss(samples: &[WeightedSample], c_fp: f64, c_fn: f64, grid: &AlphaGrid) -> Result<CalibrationReport> {
    let spec = MetricSpec::cost_loss(c_fp, c_fn)?;
    let path = ThresholdPath::build(samples)?;
    let delta_loss = optimize(&path, &spec)?.delta;
    let mut report = historical_on_path(&path, delta_loss, grid, "loss")?;
    report.delta_loss = Some(delta_loss);
    Ok(report)
}

/// Dispatches on the target. `samples` may be empty for the cost mode.
pub fn calibrate(target: &CalibrationTarget, samples: &[WeightedSample], grid: &AlphaGrid) -> Result<CalibrationReport> {
    target.validate()?;
    match *target {
        CalibrationTarget::CostBased { c_fp, c_fn } => Ok(CalibrationReport {
            mode: "cost".into(),
            alpha_hat: calibrate_cost(c_fp, c_fn)?,
            induced_delta: None,
            objective: 0.0,
            flags: Vec::new(),
            induced_rate: None,
            delta_loss: None,
        }),
        CalibrationTarget::HistoricalThreshold { delta_hist } => calibrate_historical(samples, delta_hist, grid),
        CalibrationTarget::InterventionRate { r_target } => calibrate_rate(samples, r_target, grid),
        CalibrationTarget::LossBased { c_fp, c_fn } => calibrate_loss(samples, c_fp, c_fn, grid),
    }
}
