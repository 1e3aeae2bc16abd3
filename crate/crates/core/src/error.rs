use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("class has zero total weight: {0}")]
    EmptyClass(&'static str),

    #[error("path index {index} out of range for path of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("metric {0} is path-global and has no threshold")]
    NotThresholdMetric(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid prevalence {0}: must lie strictly inside (0, 1)")]
    InvalidPrevalence(f64),

    #[error("costs must be strictly positive (cFP={c_fp}, cFN={c_fn})")]
    NonpositiveCost { c_fp: f64, c_fn: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("negative-class density vanishes at t={0}")]
    SingularDensity(f64),

    #[error("no sign change of the first-order residual on ({lo}, {hi})")]
    NoRootBracket { lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("line {line}: parse error: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: value out of range: {msg}")]
    Range { line: u64, msg: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.kind() {
            csv::ErrorKind::Io(_) => Error::Io(err.to_string()),
            _ => Error::Parse {
                line,
                msg: err.to_string(),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
