use trapchain_core::Error as ModelError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("sweep grid has {points} points, limit is {limit}")]
    GridTooLarge { points: usize, limit: usize },

    #[error("acceptance check failed: {0}")]
    Acceptance(String),

    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    /// Process exit code: 2 for regime problems, 3 for failed acceptance
    /// thresholds, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(ModelError::RegimeViolation { .. } | ModelError::HierarchyViolation { .. }) => 2,
            CliError::Acceptance(_) => 3,
            _ => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
