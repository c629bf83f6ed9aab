use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    /// Outputs were written, but at least one optimization never beat the
    /// zero pulse.
    #[error("optimizer made no progress for: {0}")]
    NoProgress(String),
    #[error(transparent)]
    Core(#[from] esu_core::EsuError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::NoProgress(_) => 4,
            _ => 1,
        }
    }
}
