use thiserror::Error;

/// Failures the CLI reports before any work starts.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {msg}")]
    File { path: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// 2 for bad flags, bad config files and rejected parameters, 3 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<res_core::Error>() {
        Some(
            res_core::Error::InvalidPrevalence(_)
            | res_core::Error::InvalidParameter(_)
            | res_core::Error::NonpositiveCost { .. }
            | res_core::Error::NotThresholdMetric(_),
        ) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}
