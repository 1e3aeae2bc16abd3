//! Seeded, weighted rare-event samples drawn from Beta signal regimes.
//!
//! Positives always carry weight 1. When the number of negatives needed to hit the
//! target prevalence exceeds the memory cap, only `n_cap` negatives are drawn and
//! each carries weight `n_req / n_cap`, so weighted false-positive counts remain
//! unbiased for the full population.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::WeightedSample;

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 7;

/// Memory cap on simulated negatives per replication.
pub const DEFAULT_N_CAP: u64 = 2_000_000;

/// Score distributions of positives, Beta(a1, b1), and negatives, Beta(a0, b0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRegime {
    pub a1: f64,
    pub b1: f64,
    pub a0: f64,
    pub b0: f64,
}

impl BetaRegime {
    pub const MODERATE: BetaRegime = BetaRegime { a1: 5.0, b1: 3.0, a0: 2.0, b0: 8.0 };
    pub const STRONG: BetaRegime = BetaRegime { a1: 8.0, b1: 2.0, a0: 1.0, b0: 12.0 };

    pub fn new(a1: f64, b1: f64, a0: f64, b0: f64) -> Result<Self> {
        let r = BetaRegime { a1, b1, a0, b0 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = [self.a1, self.b1, self.a0, self.b0];
        if shapes.iter().all(|s| *s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("beta shapes must be positive: {shapes:?}")))
        }
    }

    /// Both classes share one distribution (the likelihood ratio is identically 1).
    pub fn is_degenerate(&self) -> bool {
        self.a1 == self.a0 && self.b1 == self.b0
    }

    /// `moderate`, `strong`, or the four shapes joined by commas. Round-trips through
    /// [`BetaRegime::parse`].
    pub fn id(&self) -> String {
        if *self == Self::MODERATE {
            "moderate".into()
        } else if *self == Self::STRONG {
            "strong".into()
        } else {
            format!("{},{},{},{}", self.a1, self.b1, self.a0, self.b0)
        }
    }

    /// `moderate`, `strong`, or four comma-separated shapes `a1,b1,a0,b0`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "moderate" => Ok(Self::MODERATE),
            "strong" => Ok(Self::STRONG),
            other => {
                let v: Vec<f64> = other
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::InvalidParameter(format!("unknown regime `{s}`")))?;
                if v.len() != 4 {
                    return Err(Error::InvalidParameter(format!("regime `{s}` needs four shapes")));
                }
                Self::new(v[0], v[1], v[2], v[3])
            }
        }
    }
}

/// How many observations one replication draws at a given prevalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub prevalence: f64,
    pub n_pos: u64,
    pub n_neg_simulated: u64,
    pub neg_weight: f64,
    pub n_neg_required: u64,
}

impl SamplePlan {
    pub fn is_capped(&self) -> bool {
        self.n_neg_simulated < self.n_neg_required
    }

    pub fn total_simulated(&self) -> u64 {
        self.n_pos + self.n_neg_simulated
    }
}

pub fn check_prevalence(pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPrevalence(pi))
    }
}

/// Negatives required for `n_pos` positives at prevalence `pi`, rounded half to even.
pub fn required_negatives(pi: f64, n_pos: u64) -> Result<u64> {
    check_prevalence(pi)?;
    Ok((n_pos as f64 * (1.0 - pi) / pi).round_ties_even() as u64)
}

pub fn plan_sample(pi: f64, n_pos: u64, n_cap: u64) -> Result<SamplePlan> {
    check_prevalence(pi)?;
    if n_pos == 0 {
        return Err(Error::InvalidParameter("n_pos must be at least 1".into()));
    }
    if n_cap == 0 {
        return Err(Error::InvalidParameter("n_cap must be at least 1".into()));
    }
    let n_req = required_negatives(pi, n_pos)?;
    if n_req == 0 {
        return Err(Error::InvalidParameter(format!(
            "prevalence {pi} with {n_pos} positives implies no negatives"
        )));
    }
    let (n_sim, w) = if n_req <= n_cap {
        (n_req, 1.0)
    } else {
        (n_cap, n_req as f64 / n_cap as f64)
    };
    Ok(SamplePlan {
        prevalence: pi,
        n_pos,
        n_neg_simulated: n_sim,
        neg_weight: w,
        n_neg_required: n_req,
    })
}

/// Draws `plan.n_pos` positives from Beta(a1, b1) followed by `plan.n_neg_simulated`
/// negatives from Beta(a0, b0), using ChaCha8 seeded from `seed`. Variates come from
/// `rand_distr::Beta` (Cheng's BB/BC algorithms).
pub fn draw_regime(regime: &BetaRegime, plan: &SamplePlan, seed: u64) -> Result<Vec<WeightedSample>> {
    regime.validate()?;
    let pos = Beta::new(regime.a1, regime.b1).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let neg = Beta::new(regime.a0, regime.b0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(plan.total_simulated() as usize);
    out.extend((0..plan.n_pos).map(|_| WeightedSample {
        score: pos.sample(&mut rng),
        positive: true,
        weight: 1.0,
    }));
    out.extend((0..plan.n_neg_simulated).map(|_| WeightedSample {
        score: neg.sample(&mut rng),
        positive: false,
        weight: plan.neg_weight,
    }));
    Ok(out)
}

/// The five simulated prevalence levels, 1e-2 down to 1e-6.
pub fn prevalence_grid() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

/// Positive count per replication: 100 above 1e-5, 20 below it.
///
/// Both counts are specified for exactly 1e-5; `at_boundary` picks one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveRule {
    pub at_boundary: u64,
}

impl Default for PositiveRule {
    fn default() -> Self {
        PositiveRule { at_boundary: 20 }
    }
}

impl PositiveRule {
    const BOUNDARY: f64 = 1e-5;

    pub fn positives_for(&self, pi: f64) -> u64 {
        if ((pi - Self::BOUNDARY) / Self::BOUNDARY).abs() < 1e-9 {
            self.at_boundary
        } else if pi > Self::BOUNDARY {
            100
        } else {
            20
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices (e.g. regime, prevalence, replication).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}
