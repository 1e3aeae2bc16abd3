use serde::{Deserialize, Serialize};

use super::WeightedSample;
use crate::error::{Error, Result};

/// A candidate cut on a [`ThresholdPath`].
///
/// `Node(i)` alarms on every score `>= thresholds[i]`. `NeverAlarm` sits above the
/// largest score and raises no alarm at all; it is reported with threshold 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cut {
    NeverAlarm,
    Node(usize),
}

impl Cut {
    pub fn node(self) -> Option<usize> {
        match self {
            Cut::NeverAlarm => None,
            Cut::Node(i) => Some(i),
        }
    }
}

/// Confusion-matrix rates and weighted counts at one cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub tpr: f64,
    pub fpr: f64,
    pub tnr: f64,
    /// `None` when nothing is flagged (`tpw + fpw == 0`).
    pub precision: Option<f64>,
    pub tpw: f64,
    pub fpw: f64,
    pub fnw: f64,
    pub tnw: f64,
}

impl RatePoint {
    /// Builds the rate point from weighted confusion counts.
    pub fn from_counts(tpw: f64, fpw: f64, total_pos: f64, total_neg: f64) -> Self {
        let tpr = tpw / total_pos;
        let fpr = fpw / total_neg;
        let flagged = tpw + fpw;
        RatePoint {
            tpr,
            fpr,
            tnr: 1.0 - fpr,
            precision: (flagged > 0.0).then(|| tpw / flagged),
            tpw,
            fpw,
            fnw: total_pos - tpw,
            tnw: total_neg - fpw,
        }
    }

    pub fn total_pos(&self) -> f64 {
        self.tpw + self.fnw
    }

    pub fn total_neg(&self) -> f64 {
        self.fpw + self.tnw
    }
}

/// Distinct scores in descending order with cumulative weighted class mass at or
/// above each one. Every threshold metric is evaluated exactly on this lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPath {
    thresholds: Vec<f64>,
    cum_tp: Vec<f64>,
    cum_fp: Vec<f64>,
    total_pos: f64,
    total_neg: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl ThresholdPath {
    /// Builds the path from a borrowed sample list.
    pub fn build(samples: &[WeightedSample]) -> Result<Self> {
        Self::from_samples(samples.to_vec())
    }

    /// Builds the path, consuming (and reordering) the sample buffer.
    pub fn from_samples(mut samples: Vec<WeightedSample>) -> Result<Self> {
        for s in &samples {
            if !(0.0..=1.0).contains(&s.score) {
                return Err(Error::InvalidSample(format!("score {} outside [0, 1]", s.score)));
            }
            if !(s.weight > 0.0 && s.weight.is_finite()) {
                return Err(Error::InvalidSample(format!("weight {} must be positive", s.weight)));
            }
        }
        samples.sort_unstable_by(|a, b| b.score.total_cmp(&a.score));

        let mut thresholds = Vec::new();
        let mut cum_tp = Vec::new();
        let mut cum_fp = Vec::new();
        let mut tp = CompensatedSum::default();
        let mut fp = CompensatedSum::default();
        let (mut last_tp, mut last_fp) = (0.0_f64, 0.0_f64);

        let mut i = 0;
        while i < samples.len() {
            let score = samples[i].score;
            while i < samples.len() && samples[i].score == score {
                let s = &samples[i];
                if s.positive {
                    tp.add(s.weight);
                } else {
                    fp.add(s.weight);
                }
                i += 1;
            }
            // compensated prefix sums can dip by an ulp; keep them monotone
            last_tp = last_tp.max(tp.value());
            last_fp = last_fp.max(fp.value());
            thresholds.push(score);
            cum_tp.push(last_tp);
            cum_fp.push(last_fp);
        }

        if last_tp <= 0.0 {
            return Err(Error::EmptyClass("positive"));
        }
        if last_fp <= 0.0 {
            return Err(Error::EmptyClass("negative"));
        }
        Ok(ThresholdPath {
            thresholds,
            cum_tp,
            cum_fp,
            total_pos: last_tp,
            total_neg: last_fp,
        })
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn cum_tp(&self) -> &[f64] {
        &self.cum_tp
    }

    pub fn cum_fp(&self) -> &[f64] {
        &self.cum_fp
    }

    pub fn total_pos(&self) -> f64 {
        self.total_pos
    }

    pub fn total_neg(&self) -> f64 {
        self.total_neg
    }

    /// Weighted prevalence implied by the class totals.
    pub fn prevalence(&self) -> f64 {
        self.total_pos / (self.total_pos + self.total_neg)
    }

    /// Every candidate cut in scan order: never-alarm first, then nodes from the
    /// highest threshold to the lowest.
    pub fn cuts(&self) -> impl Iterator<Item = Cut> + '_ {
        std::iter::once(Cut::NeverAlarm).chain((0..self.len()).map(Cut::Node))
    }

    /// Reported threshold of a cut.
    pub fn threshold(&self, cut: Cut) -> Result<f64> {
        match cut {
            Cut::NeverAlarm => Ok(1.0),
            Cut::Node(i) => self
                .thresholds
                .get(i)
                .copied()
                .ok_or(Error::IndexOutOfRange { index: i, len: self.len() }),
        }
    }

    pub fn rates_at(&self, cut: Cut) -> Result<RatePoint> {
        let (tpw, fpw) = match cut {
            Cut::NeverAlarm => (0.0, 0.0),
            Cut::Node(i) => {
                if i >= self.len() {
                    return Err(Error::IndexOutOfRange { index: i, len: self.len() });
                }
                (self.cum_tp[i], self.cum_fp[i])
            }
        };
        Ok(RatePoint::from_counts(tpw, fpw, self.total_pos, self.total_neg))
    }

    /// Weighted fraction of all observations flagged at `cut`.
    pub fn alarm_rate(&self, cut: Cut) -> Result<f64> {
        let r = self.rates_at(cut)?;
        Ok((r.tpw + r.fpw) / (self.total_pos + self.total_neg))
    }

    /// Positive and negative mass sitting exactly at node `i`.
    pub(crate) fn node_mass(&self, i: usize) -> (f64, f64) {
        if i == 0 {
            (self.cum_tp[0], self.cum_fp[0])
        } else {
            (
                self.cum_tp[i] - self.cum_tp[i - 1],
                self.cum_fp[i] - self.cum_fp[i - 1],
            )
        }
    }
}

/// Builds a [`ThresholdPath`] from weighted samples.
pub fn build_path(samples: &[WeightedSample]) -> Result<ThresholdPath> {
    ThresholdPath::build(samples)
}
