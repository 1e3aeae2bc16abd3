//! Closed-form Beta densities, likelihood ratios and first-order conditions.

mod beta;
mod foc;
mod special;

pub use beta::{beta_cdf, beta_ln_pdf, beta_pdf, beta_sf};
pub use foc::{
    analytic_rates, f1_required_lr, f1_required_lr_from_rates, implied_tradeoff_curve, likelihood_ratio,
    res_foc_residual, solve_interior_threshold, solve_interior_threshold_with, FocResidual, ImpliedTradeoff,
    SampleBudget, TradeoffPoint, DEFAULT_BRACKET_POINTS, ROOT_EPS,
};
pub use special::{ln_beta, ln_gamma, regularized_beta, regularized_beta_complement};
