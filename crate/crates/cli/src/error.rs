use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Core(#[from] risnoma::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} of {total} validation checks failed")]
    ValidationFailed { failed: usize, total: usize },
    #[error("{context}: {source}")]
    Row {
        context: String,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    /// 1 for a failed validation, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn at(self, context: impl Into<String>) -> Self {
        CliError::Row { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
