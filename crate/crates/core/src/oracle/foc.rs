use serde::{Deserialize, Serialize};

use super::beta::{beta_ln_pdf, beta_sf};
use crate::error::{Error, Result};
use crate::metric::{optimize, MetricSpec, ThresholdPath};
use crate::sampler::{derive_seed, draw_regime, plan_sample, BetaRegime};

/// Bracketing interval is `(ROOT_EPS, 1 - ROOT_EPS)`.
pub const ROOT_EPS: f64 = 1e-6;
pub const DEFAULT_BRACKET_POINTS: usize = 1_000;
const ROOT_TOL: f64 = 1e-8;

/// One side of a first-order condition evaluated at `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocResidual {
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl FocResidual {
    fn new(delta: f64, lhs: f64, rhs: f64) -> Self {
        FocResidual { delta, lhs, rhs, residual: lhs - rhs }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside (0, 1)")))
    }
}

/// Analytic `(TPR, FPR)` of the rule `score >= delta`.
pub fn analytic_rates(regime: &BetaRegime, delta: f64) -> Result<(f64, f64)> {
    Ok((
        beta_sf(regime.a1, regime.b1, delta)?,
        beta_sf(regime.a0, regime.b0, delta)?,
    ))
}

/// `f1(t) / f0(t)`, computed in log space.
pub fn likelihood_ratio(regime: &BetaRegime, t: f64) -> Result<f64> {
    open_unit("t", t)?;
    let l0 = beta_ln_pdf(regime.a0, regime.b0, t)?;
    if l0 == f64::NEG_INFINITY {
        return Err(Error::SingularDensity(t));
    }
    let l1 = beta_ln_pdf(regime.a1, regime.b1, t)?;
    Ok((l1 - l0).exp())
}

/// `Λ(δ)` against the RES trade-off `α TPR / (α FPR + 1 - α)`.
pub fn res_foc_residual(regime: &BetaRegime, delta: f64, alpha: f64) -> Result<FocResidual> {
    open_unit("delta", delta)?;
    open_unit("alpha", alpha)?;
    let lhs = likelihood_ratio(regime, delta)?;
    let (tpr, fpr) = analytic_rates(regime, delta)?;
    Ok(FocResidual::new(delta, lhs, alpha * tpr / (alpha * fpr + 1.0 - alpha)))
}

pub fn solve_interior_threshold(regime: &BetaRegime, alpha: f64) -> Result<f64> {
    solve_interior_threshold_with(regime, alpha, DEFAULT_BRACKET_POINTS)
}

/// Scans `points` equally spaced nodes for the first sign change of the RES residual,
/// then bisects it to machine precision.
pub fn solve_interior_threshold_with(regime: &BetaRegime, alpha: f64, points: usize) -> Result<f64> {
    open_unit("alpha", alpha)?;
    let (lo, hi) = (ROOT_EPS, 1.0 - ROOT_EPS);
    let points = points.max(2);
    let at = |d: f64| res_foc_residual(regime, d, alpha).map(|r| r.residual);

    let mut prev_d = lo;
    let mut prev_r = at(lo)?;
    let mut bracket = None;
    for k in 1..points {
        let d = if k == points - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (points - 1) as f64
        };
        let r = at(d)?;
        if prev_r == 0.0 {
            return Ok(prev_d);
        }
        if prev_r.signum() != r.signum() {
            bracket = Some((prev_d, prev_r, d));
            break;
        }
        prev_d = d;
        prev_r = r;
    }
    let (mut a, mut ra, mut b) = bracket.ok_or(Error::NoRootBracket { lo, hi })?;

    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let rm = at(m)?;
        if rm == 0.0 {
            return Ok(m);
        }
        if rm.signum() == ra.signum() {
            a = m;
            ra = rm;
        } else {
            b = m;
        }
    }
    let root = 0.5 * (a + b);
    let r = at(root)?;
    if r.abs() > ROOT_TOL {
        return Err(Error::Domain(format!("residual {r:e} at bracketed root {root}")));
    }
    Ok(root)
}

/// Likelihood ratio the F1 first-order condition requires, from rates.
pub fn f1_required_lr_from_rates(pi: f64, tpr: f64, fpr: f64) -> Result<f64> {
    open_unit("pi", pi)?;
    Ok((1.0 - pi) / (2.0 * pi) * tpr / (2.0 * pi * tpr + (1.0 - pi) * fpr))
}

/// F1 required likelihood ratio at `delta` using the analytic rates of `regime`.
pub fn f1_required_lr(pi: f64, delta: f64, regime: &BetaRegime) -> Result<f64> {
    open_unit("delta", delta)?;
    let (tpr, fpr) = analytic_rates(regime, delta)?;
    f1_required_lr_from_rates(pi, tpr, fpr)
}

/// Simulated observations per prevalence level for [`implied_tradeoff_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub n_pos: u64,
    pub n_cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub prevalence: f64,
    pub delta_star: f64,
    /// `Λ(δ*)`; infinite when the optimum is the never-alarm cut.
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedTradeoff {
    pub points: Vec<TradeoffPoint>,
    /// Identical class distributions: `Λ` is identically one and carries no signal.
    pub degenerate: bool,
}

impl ImpliedTradeoff {
    /// max / min of `Λ(δ*)` over the grid.
    pub fn spread_ratio(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p.lambda), hi.max(p.lambda)));
        hi / lo
    }

    pub fn lambda_at(&self, pi: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| ((p.prevalence - pi) / pi).abs() < 1e-9)
            .map(|p| p.lambda)
    }
}

/// For each prevalence draws one large sample, finds the empirical optimum and
/// reports the analytic likelihood ratio there.
pub fn implied_tradeoff_curve(
    regime: &BetaRegime,
    spec: &MetricSpec,
    prevalences: &[f64],
    budget: SampleBudget,
    seed: u64,
) -> Result<ImpliedTradeoff> {
    if !spec.is_threshold_metric() {
        return Err(Error::NotThresholdMetric(spec.to_string()));
    }
    let mut points = Vec::with_capacity(prevalences.len());
    for (k, &pi) in prevalences.iter().enumerate() {
        let plan = plan_sample(pi, budget.n_pos, budget.n_cap)?;
        let samples = draw_regime(regime, &plan, derive_seed(seed, &[k as u64]))?;
        let path = ThresholdPath::from_samples(samples)?;
        let best = optimize(&path, spec)?;
        let lambda = if best.delta > 0.0 && best.delta < 1.0 {
            likelihood_ratio(regime, best.delta)?
        } else if best.delta >= 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
        points.push(TradeoffPoint { prevalence: pi, delta_star: best.delta, lambda });
    }
    Ok(ImpliedTradeoff { points, degenerate: regime.is_degenerate() })
}
