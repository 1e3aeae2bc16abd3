use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RatePoint;
use crate::error::{Error, Result};

/// A metric and its parameters.
///
/// `CostLoss` is minimised; every other metric is maximised. `Auc` is path-global and
/// cannot be evaluated at a single cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSpec {
    F1,
    FBeta { beta: f64 },
    BalancedAccuracy,
    Accuracy,
    Mcc,
    Auc,
    Res { alpha: f64 },
    GenRes { alpha: f64, gamma: f64 },
    CostLoss { c_fp: f64, c_fn: f64 },
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha {alpha} must lie in (0, 1)")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} {v} must be positive")))
    }
}

impl MetricSpec {
    pub fn res(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(MetricSpec::Res { alpha })
    }

    pub fn gen_res(alpha: f64, gamma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("gamma", gamma)?;
        Ok(MetricSpec::GenRes { alpha, gamma })
    }

    pub fn f_beta(beta: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        Ok(MetricSpec::FBeta { beta })
    }

    pub fn cost_loss(c_fp: f64, c_fn: f64) -> Result<Self> {
        if !(c_fp > 0.0 && c_fn > 0.0 && c_fp.is_finite() && c_fn.is_finite()) {
            return Err(Error::NonpositiveCost { c_fp, c_fn });
        }
        Ok(MetricSpec::CostLoss { c_fp, c_fn })
    }

    /// Re-checks parameter ranges (variants can be built directly).
    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricSpec::FBeta { beta } => check_positive("beta", beta),
            MetricSpec::Res { alpha } => check_alpha(alpha),
            MetricSpec::GenRes { alpha, gamma } => {
                check_alpha(alpha)?;
                check_positive("gamma", gamma)
            }
            MetricSpec::CostLoss { c_fp, c_fn } => Self::cost_loss(c_fp, c_fn).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn is_loss(&self) -> bool {
        matches!(self, MetricSpec::CostLoss { .. })
    }

    pub fn is_threshold_metric(&self) -> bool {
        !matches!(self, MetricSpec::Auc)
    }

    /// True when `candidate` beats `incumbent` in this metric's direction.
    /// Equal values count as better so that a later (lower) cut wins ties.
    pub(crate) fn at_least_as_good(&self, candidate: f64, incumbent: f64) -> bool {
        if self.is_loss() {
            candidate <= incumbent
        } else {
            candidate >= incumbent
        }
    }

    /// Metric value at a confusion point.
    pub fn evaluate(&self, r: &RatePoint) -> Result<f64> {
        let (tp, fp, fn_, tn) = (r.tpw, r.fpw, r.fnw, r.tnw);
        let v = match *self {
            MetricSpec::F1 => {
                if tp > 0.0 {
                    2.0 * tp / (2.0 * tp + fp + fn_)
                } else {
                    0.0
                }
            }
            MetricSpec::FBeta { beta } => {
                let b2 = beta * beta;
                if tp > 0.0 {
                    (1.0 + b2) * tp / ((1.0 + b2) * tp + b2 * fn_ + fp)
                } else {
                    0.0
                }
            }
            MetricSpec::BalancedAccuracy => 0.5 * (r.tpr + r.tnr),
            MetricSpec::Accuracy => (tp + tn) / (r.total_pos() + r.total_neg()),
            MetricSpec::Mcc => {
                let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
                if factors.iter().any(|&f| f <= 0.0) {
                    0.0
                } else {
                    let denom = (factors[0] * factors[1]).sqrt() * (factors[2] * factors[3]).sqrt();
                    (tp * tn - fp * fn_) / denom
                }
            }
            MetricSpec::Res { alpha } => r.tpr / (alpha * r.fpr + (1.0 - alpha)),
            MetricSpec::GenRes { alpha, gamma } => {
                let num = if gamma == 1.0 { r.tpr } else { r.tpr.powf(gamma) };
                num / (alpha * r.fpr + (1.0 - alpha))
            }
            MetricSpec::CostLoss { c_fp, c_fn } => c_fn * (1.0 - r.tpr) + c_fp * r.fpr,
            MetricSpec::Auc => return Err(Error::NotThresholdMetric(self.to_string())),
        };
        Ok(v)
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::F1 => write!(f, "f1"),
            MetricSpec::FBeta { beta } => write!(f, "fbeta:{beta}"),
            MetricSpec::BalancedAccuracy => write!(f, "ba"),
            MetricSpec::Accuracy => write!(f, "accuracy"),
            MetricSpec::Mcc => write!(f, "mcc"),
            MetricSpec::Auc => write!(f, "auc"),
            MetricSpec::Res { alpha } => write!(f, "res:{alpha}"),
            MetricSpec::GenRes { alpha, gamma } => write!(f, "genres:{alpha}:{gamma}"),
            MetricSpec::CostLoss { c_fp, c_fn } => write!(f, "cost:{c_fp}:{c_fn}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// Parses identifiers such as `f1`, `fbeta:2`, `ba`, `mcc`, `auc`, `res:0.5`,
    /// `genres:0.5:2`, `cost:1:20`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let params: Vec<f64> = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad number `{p}` in metric `{s}`")))
            })
            .collect::<Result<_>>()?;
        let arity = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "metric `{name}` takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match name.as_str() {
            "f1" => arity(0).map(|_| MetricSpec::F1),
            "fbeta" => arity(1).and_then(|_| MetricSpec::f_beta(params[0])),
            "ba" | "balanced_accuracy" => arity(0).map(|_| MetricSpec::BalancedAccuracy),
            "accuracy" | "acc" => arity(0).map(|_| MetricSpec::Accuracy),
            "mcc" => arity(0).map(|_| MetricSpec::Mcc),
            "auc" => arity(0).map(|_| MetricSpec::Auc),
            "res" => arity(1).and_then(|_| MetricSpec::res(params[0])),
            "genres" => arity(2).and_then(|_| MetricSpec::gen_res(params[0], params[1])),
            "cost" => arity(2).and_then(|_| MetricSpec::cost_loss(params[0], params[1])),
            _ => Err(Error::InvalidParameter(format!("unknown metric `{s}`"))),
        }
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
