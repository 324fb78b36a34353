use ecs_core::EcsError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("impossible outcome: {0}")]
    Impossible(String),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Impossible(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    /// Prefixes the message with where it happened, e.g. `step 3 (transit)`.
    pub fn context(self, at: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{at}: {m}")),
            CliError::Impossible(m) => CliError::Impossible(format!("{at}: {m}")),
            CliError::Tolerance(m) => CliError::Tolerance(format!("{at}: {m}")),
            io => io,
        }
    }
}

impl From<EcsError> for CliError {
    fn from(e: EcsError) -> Self {
        match e {
            EcsError::ZeroNorm { .. } => CliError::Impossible(e.to_string()),
            EcsError::NotHermitian(_) | EcsError::NonFinite(_) => CliError::Tolerance(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
