use super::special::{ln_beta, regularized_beta, regularized_beta_complement};
use crate::error::{Error, Result};

fn check(a: f64, b: f64, t: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("beta shapes must be positive, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    Ok(())
}

// k * ln(x) with the 0 * ln(0) = 0 convention
fn xlogy(k: f64, x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * x.ln()
    }
}

/// Log density of Beta(a, b) at `t`. May be `-inf` or `+inf` at the endpoints.
pub fn beta_ln_pdf(a: f64, b: f64, t: f64) -> Result<f64> {
    check(a, b, t)?;
    let lower = xlogy(a - 1.0, t);
    let upper = if b == 1.0 { 0.0 } else { (b - 1.0) * (-t).ln_1p() };
    Ok(lower + upper - ln_beta(a, b))
}

pub fn beta_pdf(a: f64, b: f64, t: f64) -> Result<f64> {
    Ok(beta_ln_pdf(a, b, t)?.exp())
}

pub fn beta_cdf(a: f64, b: f64, t: f64) -> Result<f64> {
    check(a, b, t)?;
    regularized_beta(a, b, t)
}

/// Survival function `P(X > t)`.
pub fn beta_sf(a: f64, b: f64, t: f64) -> Result<f64> {
    check(a, b, t)?;
    regularized_beta_complement(a, b, t)
}
