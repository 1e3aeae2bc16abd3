use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::regularized_beta;

/// Location and spread of a finite sample. `sd` uses the `n - 1` denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// `sd / mean`; `None` when the mean is zero.
    pub cv: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Summary of the finite entries of `xs`, or `None` if there are none.
    pub fn of(xs: &[f64]) -> Option<Stats> {
        let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
        let n = finite.len();
        if n == 0 {
            return None;
        }
        let (min, max) = finite
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if min == max {
            return Some(Stats { n, mean: min, sd: 0.0, cv: (min != 0.0).then_some(0.0), min, max });
        }
        let mean = (finite.iter().sum::<f64>() / n as f64).clamp(min, max);
        let sd = (finite.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        Some(Stats { n, mean, sd, cv: (mean != 0.0).then(|| sd / mean), min, max })
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Spearman rank correlation with a two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Above this many pairs the p-value uses the t approximation; at or below it,
/// a permutation test.
pub const PERMUTATION_MAX_N: usize = 30;
pub const PERMUTATIONS: usize = 10_000;
const PERMUTATION_SEED: u64 = 0x5EA2_3A17;

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn t_approx_p(rho: f64, n: usize) -> Result<f64> {
    if rho.abs() >= 1.0 {
        return Ok(0.0);
    }
    let nu = (n - 2) as f64;
    let t2 = rho * rho * nu / (1.0 - rho * rho);
    Ok(regularized_beta(nu / 2.0, 0.5, nu / (nu + t2))?.clamp(0.0, 1.0))
}

fn permutation_p(rx: &[f64], ry: &[f64], rho: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(PERMUTATION_SEED);
    let mut shuffled = ry.to_vec();
    let target = rho.abs() - 1e-12;
    let extreme = (0..PERMUTATIONS)
        .filter(|_| {
            shuffled.shuffle(&mut rng);
            pearson(rx, &shuffled).abs() >= target
        })
        .count();
    (extreme + 1) as f64 / (PERMUTATIONS + 1) as f64
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 pairs, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input".into()));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if v.iter().all(|&a| a == v[0]) {
            return Err(Error::DegenerateInput(format!("{name} is constant")));
        }
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = pearson(&rx, &ry);
    let p_value = if n > PERMUTATION_MAX_N {
        t_approx_p(rho, n)?
    } else {
        permutation_p(&rx, &ry, rho)
    };
    Ok(Spearman { rho, p_value, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn stats_basics() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.cv.unwrap() - s.sd / 2.5).abs() < 1e-15);
        assert_eq!((s.min, s.max, s.range()), (1.0, 4.0, 3.0));
        let c = Stats::of(&[0.3; 7]).unwrap();
        assert_eq!(c.sd, 0.0);
        assert_eq!(c.cv, Some(0.0));
        assert!(c.min <= c.mean && c.mean <= c.max);
        assert_eq!(Stats::of(&[0.0, 0.0]).unwrap().cv, None);
        assert_eq!(Stats::of(&[f64::NAN]), None);
        assert_eq!(Stats::of(&[2.0, f64::NAN]).unwrap().n, 1);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn perfect_correlations() {
        let a = spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.rho, 1.0);
        let b = spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(b.rho, -1.0);
        // 2 of 6 permutations reach |rho| = 1
        assert!((a.p_value - 1.0 / 3.0).abs() < 0.02, "{}", a.p_value);
        let n = 50;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let c = spearman(&x, &y).unwrap();
        assert_eq!((c.rho, c.p_value), (1.0, 0.0));
    }

    #[test]
    fn t_approximation_reference() {
        // two-sided Student t tail for rho=0.3, n=40 (38 df), t = 1.93862...
        let p = t_approx_p(0.3, 40).unwrap();
        let t: f64 = 0.3 * (38.0f64 / 0.91).sqrt();
        assert!((t - 1.938_618_517_976_592).abs() < 1e-12);
        assert!((p - 0.060_001_789_548_761_74).abs() < 1e-9, "{p}");
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        assert!(matches!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(Error::DegenerateInput(_))));
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn null_distribution_of_independent_uniforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut ok = 0;
        for _ in 0..100 {
            let x: Vec<f64> = (0..200).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..200).map(|_| rng.random()).collect();
            let s = spearman(&x, &y).unwrap();
            assert!((-1.0..=1.0).contains(&s.rho) && (0.0..=1.0).contains(&s.p_value));
            if s.rho.abs() < 0.2 && s.p_value > 0.01 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}");
    }

    #[test]
    fn small_samples_use_permutations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
        let s = spearman(&x, &y).unwrap();
        assert!(s.rho > 0.9);
        assert!(s.p_value < 0.01);
        assert_eq!(s, spearman(&x, &y).unwrap());
    }
}
