use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("not an absolute-error field: entry {0} is negative")]
    NegativeError(f64),

    #[error("divergence at epoch {epoch}, step {step}: {detail}")]
    Divergence {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("missing scores for {0} samples in a pruned epoch")]
    MissingScores(usize),

    #[error("{0} sweep cells failed")]
    SweepFailures(usize),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input (exit code 1), as opposed
    /// to failures during computation (exit code 2).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Parse { .. } => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
