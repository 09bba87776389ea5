use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(#[from] shock_adjoint::Error),
    #[error("acceptance threshold failed: {0}")]
    Acceptance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest error: {0}")]
    Manifest(String),
}

impl CliError {
    /// 0 success, 2 config, 3 solver, 4 acceptance threshold, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Acceptance(_) => 4,
            CliError::Io(_) | CliError::Manifest(_) => 1,
        }
    }
}
