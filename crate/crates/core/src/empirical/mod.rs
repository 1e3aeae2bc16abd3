//! External score files, artificial prevalence regimes and bootstrap stability.

mod bootstrap;
mod load;
mod regime;

pub use bootstrap::{
    bootstrap_study, stability_report, BootstrapConfig, BootstrapOutput, BootstrapRow, MetricStability,
    RegimeStability, StabilityReport, DEFAULT_BOOTSTRAP_REPLICATIONS, DEFAULT_MAX_REDRAWS,
};
pub use load::{load_scores, read_scores, to_samples, ScoreFormat, ScoreRecord};
pub use regime::{build_regime, required_positives, RegimeSpec};
