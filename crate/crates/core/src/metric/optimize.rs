use serde::{Deserialize, Serialize};

use super::{Cut, MetricSpec, ThresholdPath};
use crate::error::{Error, Result};

/// The optimal cut of a threshold metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalThreshold {
    pub delta: f64,
    pub value: f64,
    pub cut: Cut,
}

/// One point of a metric curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub cut: Cut,
    pub threshold: f64,
    pub value: f64,
}

fn require_threshold_metric(spec: &MetricSpec) -> Result<()> {
    if !spec.is_threshold_metric() {
        return Err(Error::NotThresholdMetric(spec.to_string()));
    }
    spec.validate()
}

pub fn metric_at(path: &ThresholdPath, cut: Cut, spec: &MetricSpec) -> Result<f64> {
    require_threshold_metric(spec)?;
    spec.evaluate(&path.rates_at(cut)?)
}

/// Metric value at the never-alarm sentinel followed by every node, in path order.
pub fn metric_curve(path: &ThresholdPath, spec: &MetricSpec) -> Result<Vec<CurvePoint>> {
    require_threshold_metric(spec)?;
    path.cuts()
        .map(|cut| {
            Ok(CurvePoint {
                cut,
                threshold: path.threshold(cut)?,
                value: spec.evaluate(&path.rates_at(cut)?)?,
            })
        })
        .collect()
}

/// Global optimum over all nodes plus the never-alarm sentinel. Ties go to the
/// smallest threshold.
pub fn optimize(path: &ThresholdPath, spec: &MetricSpec) -> Result<OptimalThreshold> {
    require_threshold_metric(spec)?;
    let mut best_cut = Cut::NeverAlarm;
    let mut best = spec.evaluate(&path.rates_at(Cut::NeverAlarm)?)?;
    for i in 0..path.len() {
        let v = spec.evaluate(&path.rates_at(Cut::Node(i))?)?;
        if spec.at_least_as_good(v, best) {
            best = v;
            best_cut = Cut::Node(i);
        }
    }
    Ok(OptimalThreshold {
        delta: path.threshold(best_cut)?,
        value: best,
        cut: best_cut,
    })
}

/// Cuts whose value is at least as good as both neighbours on the curve (strictly
/// better than at least one). Useful when the likelihood ratio is not monotone.
pub fn local_optima(path: &ThresholdPath, spec: &MetricSpec) -> Result<Vec<OptimalThreshold>> {
    let curve = metric_curve(path, spec)?;
    let better = |a: f64, b: f64| if spec.is_loss() { a < b } else { a > b };
    let mut out = Vec::new();
    for (k, p) in curve.iter().enumerate() {
        let prev = k.checked_sub(1).map(|j| curve[j].value);
        let next = curve.get(k + 1).map(|q| q.value);
        let not_worse = |n: Option<f64>| n.is_none_or(|n| !better(n, p.value));
        let strictly = prev.is_some_and(|n| better(p.value, n)) || next.is_some_and(|n| better(p.value, n));
        if not_worse(prev) && not_worse(next) && strictly {
            out.push(OptimalThreshold {
                delta: p.threshold,
                value: p.value,
                cut: p.cut,
            });
        }
    }
    Ok(out)
}

/// Weighted Mann–Whitney AUC; ties between a positive and a negative count one half.
pub fn auc(path: &ThresholdPath) -> f64 {
    let mut wins = 0.0;
    let mut tp_above = 0.0;
    for i in 0..path.len() {
        let (pos, neg) = path.node_mass(i);
        wins += neg * (tp_above + 0.5 * pos);
        tp_above = path.cum_tp()[i];
    }
    (wins / (path.total_pos() * path.total_neg())).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_path, WeightedSample};

    fn unit(data: &[(f64, u8)]) -> Vec<WeightedSample> {
        data.iter()
            .map(|&(s, l)| WeightedSample::unit(s, l).unwrap())
            .collect()
    }

    fn four() -> ThresholdPath {
        build_path(&unit(&[(0.9, 1), (0.8, 0), (0.7, 1), (0.1, 0)])).unwrap()
    }

    /// Per-threshold confusion matrix recomputed from the raw samples.
    fn f1_by_counting(data: &[(f64, u8)], t: f64) -> f64 {
        let tp = data.iter().filter(|&&(s, l)| s >= t && l == 1).count() as f64;
        let fp = data.iter().filter(|&&(s, l)| s >= t && l == 0).count() as f64;
        let fn_ = data.iter().filter(|&&(s, l)| s < t && l == 1).count() as f64;
        if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        }
    }

    #[test]
    fn four_sample_f1_curve_matches_counting() {
        let data = [(0.9, 1), (0.8, 0), (0.7, 1), (0.1, 0)];
        let curve = metric_curve(&four(), &MetricSpec::F1).unwrap();
        assert_eq!(curve.len(), 5);
        assert_eq!(curve[0].cut, Cut::NeverAlarm);
        assert_eq!(curve[0].value, 0.0);
        let expected = [2.0 / 3.0, 0.5, 0.8, 2.0 / 3.0];
        for (p, (e, (t, _))) in curve[1..].iter().zip(expected.iter().zip(data)) {
            assert_eq!(p.threshold, t);
            assert!((p.value - e).abs() < 1e-15);
            assert!((p.value - f1_by_counting(&data, t)).abs() < 1e-15);
        }
        let best = optimize(&four(), &MetricSpec::F1).unwrap();
        assert_eq!(best.cut, Cut::Node(2));
        assert_eq!(best.delta, 0.7);
        assert!((best.value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn res_final_node_is_one() {
        for alpha in [0.1, 0.5, 0.9] {
            let curve = metric_curve(&four(), &MetricSpec::res(alpha).unwrap()).unwrap();
            assert!((curve.last().unwrap().value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn perfect_separation() {
        let path = build_path(&unit(&[(0.9, 1), (0.8, 1), (0.6, 1), (0.4, 0), (0.2, 0)])).unwrap();
        for spec in [MetricSpec::F1, MetricSpec::Mcc, MetricSpec::BalancedAccuracy] {
            let best = optimize(&path, &spec).unwrap();
            assert_eq!(best.value, 1.0, "{spec}");
            assert_eq!(best.delta, 0.6, "{spec}");
        }
        let res = optimize(&path, &MetricSpec::res(0.5).unwrap()).unwrap();
        assert_eq!((res.delta, res.value), (0.6, 2.0));
        let loss = optimize(&path, &MetricSpec::cost_loss(1.0, 1.0).unwrap()).unwrap();
        assert_eq!((loss.delta, loss.value), (0.6, 0.0));
        assert_eq!(auc(&path), 1.0);
    }

    #[test]
    fn ties_prefer_smallest_threshold() {
        let tie = build_path(&unit(&[(0.9, 1), (0.8, 0), (0.3, 1), (0.2, 0)])).unwrap();
        // BA: never 0.5, 0.9 -> 0.75, 0.8 -> 0.5, 0.3 -> 0.75, 0.2 -> 0.5
        let best = optimize(&tie, &MetricSpec::BalancedAccuracy).unwrap();
        assert_eq!(best.value, 0.75);
        assert_eq!(best.delta, 0.3);
        let loss = optimize(&tie, &MetricSpec::cost_loss(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(loss.delta, 0.3);
    }

    #[test]
    fn never_alarm_wins_only_when_strictly_better() {
        // positives at the bottom: accuracy prefers flagging nothing
        let path = build_path(&unit(&[(0.9, 0), (0.8, 0), (0.7, 0), (0.1, 1)])).unwrap();
        let best = optimize(&path, &MetricSpec::Accuracy).unwrap();
        assert_eq!(best.cut, Cut::NeverAlarm);
        assert_eq!(best.delta, 1.0);
        assert_eq!(best.value, 0.75);
    }

    #[test]
    fn auc_values() {
        // pairs (0.9,0.8) (0.9,0.1) (0.7,0.1) won, (0.7,0.8) lost
        assert_eq!(auc(&four()), 0.75);
        let tied = build_path(&unit(&[(0.5, 1), (0.5, 0), (0.5, 1), (0.5, 0)])).unwrap();
        assert_eq!(auc(&tied), 0.5);
        let inverted = build_path(&unit(&[(0.1, 1), (0.9, 0)])).unwrap();
        assert_eq!(auc(&inverted), 0.0);
    }

    #[test]
    fn auc_is_not_a_threshold_metric() {
        assert!(matches!(optimize(&four(), &MetricSpec::Auc), Err(Error::NotThresholdMetric(_))));
        assert!(matches!(metric_curve(&four(), &MetricSpec::Auc), Err(Error::NotThresholdMetric(_))));
        assert!(matches!(
            metric_at(&four(), Cut::Node(0), &MetricSpec::Auc),
            Err(Error::NotThresholdMetric(_))
        ));
    }

    #[test]
    fn local_optima_on_bimodal_curve() {
        // F1 curve: never 0, 0.9 -> 2/3, 0.8 -> 0.5, 0.7 -> 0.8, 0.1 -> 2/3
        let opt = local_optima(&four(), &MetricSpec::F1).unwrap();
        let deltas: Vec<f64> = opt.iter().map(|o| o.delta).collect();
        assert_eq!(deltas, vec![0.9, 0.7]);
    }
}
