use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("moment of order {order} unavailable (kernel certifies moments through order {max})")]
    MomentUnavailable { order: u32, max: u32 },

    #[error("{stage}: accuracy target {requested:e} not reached (achieved {achieved:e})")]
    Accuracy {
        stage: &'static str,
        requested: f64,
        achieved: f64,
    },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("dispersion function negative: phi({xi}) = {phi:e}")]
    PositivityViolation { xi: f64, phi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("periodic domain too small: period {actual} < required {required}")]
    DomainTooSmall { required: f64, actual: f64 },

    #[error("insufficient data: {valid} valid samples, need at least {needed}")]
    InsufficientData { valid: usize, needed: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("kernel table {path}: {message}")]
    Table { path: String, message: String },

    #[error("configuration has {} error(s):\n{}", .0.len(), format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tags the error with the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

/// One problem found while validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}
