use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no events observed: the Weibull likelihood has no finite maximum")]
    NoEvents,

    #[error(
        "optimizer failed to converge after {iterations} iterations \
         (log-likelihood {loglik}, gradient max-norm {gradient_norm:e}): {reason}"
    )]
    NonConvergence {
        iterations: usize,
        loglik: f64,
        gradient_norm: f64,
        reason: String,
    },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("load error at row {row}, column '{column}': {message}")]
    Load {
        /// 1-based data row (header excluded); 0 when the problem is not row-specific.
        row: usize,
        column: String,
        message: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with pipeline stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 for invalid input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::NoEvents | Error::NonConvergence { .. } | Error::UndefinedMetric(_) => 3,
            _ => 2,
        }
    }
}
