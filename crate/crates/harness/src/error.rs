use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("audit error: {0}")]
    Audit(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code: 2 config, 3 audit, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Audit(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}
