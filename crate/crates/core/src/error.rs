use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbcError {
    /// A quantity was requested where it is not defined, e.g. at `y = 0`
    /// or at a zero of a section.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    /// Operands of incompatible shape (fiber rank, form dimension).
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("excision geometry unsupported: {0}")]
    Excision(String),

    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<GbcError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GbcError {
    pub fn at_stage(self, stage: &'static str) -> Self {
        GbcError::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T, E = GbcError> = std::result::Result<T, E>;
