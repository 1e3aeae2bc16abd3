//! Rare-event-stable classification metrics and the machinery around them:
//! exact threshold paths over weighted samples, a weighted rare-event sampler for
//! Beta signal regimes, analytic first-order-condition oracles, a seeded Monte
//! Carlo harness, a bootstrap stability pipeline for external score files and
//! policy-parameter calibration.

pub mod calibrate;
pub mod empirical;
pub mod error;
pub mod metric;
pub mod oracle;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};
