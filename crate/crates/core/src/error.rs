use std::path::PathBuf;

/// Errors surfaced by every layer of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{}:{line}: {msg}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{concept} is not applicable: {reason}")]
    Inapplicable { concept: String, reason: String },
    #[error("solver did not converge (last residual {residual:e})")]
    NonConvergence { residual: f64 },
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("economic value is undefined: hindsight optimum sums to zero")]
    DegenerateValue,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
