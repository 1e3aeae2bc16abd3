use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored observation carrying a count multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub score: f64,
    pub positive: bool,
    pub weight: f64,
}

impl WeightedSample {
    pub fn new(score: f64, positive: bool, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidSample(format!("score {score} outside [0, 1]")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidSample(format!("weight {weight} must be positive and finite")));
        }
        Ok(Self {
            score,
            positive,
            weight,
        })
    }

    /// Unit-weight sample; `label` is 0 or 1.
    pub fn unit(score: f64, label: u8) -> Result<Self> {
        match label {
            0 => Self::new(score, false, 1.0),
            1 => Self::new(score, true, 1.0),
            other => Err(Error::InvalidSample(format!("label {other} is not binary"))),
        }
    }

    pub fn label(&self) -> u8 {
        u8::from(self.positive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_fields() {
        assert!(WeightedSample::new(1.2, true, 1.0).is_err());
        assert!(WeightedSample::new(-0.1, true, 1.0).is_err());
        assert!(WeightedSample::new(f64::NAN, true, 1.0).is_err());
        assert!(WeightedSample::new(0.5, true, 0.0).is_err());
        assert!(WeightedSample::new(0.5, true, f64::INFINITY).is_err());
        assert!(WeightedSample::unit(0.5, 2).is_err());
        assert_eq!(WeightedSample::unit(1.0, 1).unwrap().label(), 1);
        assert_eq!(WeightedSample::unit(0.0, 0).unwrap().label(), 0);
    }
}
