//! Exact threshold paths and the metrics evaluated on them.

mod optimize;
mod path;
mod sample;
mod spec;

pub use optimize::{auc, local_optima, metric_at, metric_curve, optimize, CurvePoint, OptimalThreshold};
pub use path::{build_path, Cut, RatePoint, ThresholdPath};
pub use sample::WeightedSample;
pub use spec::MetricSpec;
