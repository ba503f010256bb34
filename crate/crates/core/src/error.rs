use thiserror::Error;

pub type Result<T> = std::result::Result<T, XvaError>;

#[derive(Debug, Error)]
pub enum XvaError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid network config: {0}")]
    InvalidNetConfig(String),
    #[error("non-finite value in {stage}: {detail}")]
    NonFinite { stage: String, detail: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("bank default weight {found} does not match gamma {gamma}")]
    InconsistentBankDefault { gamma: f64, found: f64 },
    #[error("inner simulation would reuse the outer random streams")]
    StreamReuse,
    #[error("{overlap} evaluation paths were also used for training")]
    InSampleContamination { overlap: usize },
    #[error("runs are not comparable: {0}")]
    RunMismatch(String),
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("invariant violations: {0:?}")]
    Invariants(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_finite(stage: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(XvaError::NonFinite {
            stage: stage.to_string(),
            detail: format!("{value}"),
        })
    }
}
