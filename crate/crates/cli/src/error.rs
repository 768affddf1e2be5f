use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] qew_core::Error),
    #[error("cannot parse JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    /// A witness value exceeded its proved bound.
    #[error("bound violated: {0}")]
    OracleViolation(String),
}

impl CliError {
    /// 1 for oracle bound violations, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::OracleViolation(_) => 1,
            _ => 2,
        }
    }
}
