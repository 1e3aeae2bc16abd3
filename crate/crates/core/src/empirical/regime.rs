use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScoreRecord;
use crate::error::{Error, Result};
use crate::sampler::check_prevalence;

/// Counts of one artificial prevalence regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeSpec {
    pub target_pi: f64,
    pub seed: u64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_total: usize,
    pub empirical_pi: f64,
    /// The target needs more positives than exist, so the full set is used.
    pub full_set_fallback: bool,
}

/// Positives needed next to `n_neg` negatives for prevalence `target_pi`, rounded
/// half to even.
pub fn required_positives(target_pi: f64, n_neg: usize) -> Result<usize> {
    check_prevalence(target_pi)?;
    Ok((target_pi / (1.0 - target_pi) * n_neg as f64).round_ties_even() as usize)
}

/// Keeps every negative and a uniform subset (without replacement) of the positives.
/// The returned records keep their input order.
pub fn build_regime(records: &[ScoreRecord], target_pi: f64, seed: u64) -> Result<(RegimeSpec, Vec<ScoreRecord>)> {
    check_prevalence(target_pi)?;
    let pos_idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].is_positive()).collect();
    let n_neg = records.len() - pos_idx.len();
    if pos_idx.is_empty() {
        return Err(Error::EmptyClass("positive"));
    }
    if n_neg == 0 {
        return Err(Error::EmptyClass("negative"));
    }
    let required = required_positives(target_pi, n_neg)?;
    if required == 0 {
        return Err(Error::EmptyClass("positive"));
    }
    let fallback = required > pos_idx.len();
    let n_pos = required.min(pos_idx.len());

    let mut keep = vec![true; records.len()];
    if !fallback {
        for &i in &pos_idx {
            keep[i] = false;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in rand::seq::index::sample(&mut rng, pos_idx.len(), n_pos) {
            keep[pos_idx[k]] = true;
        }
    }
    let subset: Vec<ScoreRecord> = records
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    let spec = RegimeSpec {
        target_pi,
        seed,
        n_pos,
        n_neg,
        n_total: n_pos + n_neg,
        empirical_pi: n_pos as f64 / (n_pos + n_neg) as f64,
        full_set_fallback: fallback,
    };
    Ok((spec, subset))
}
