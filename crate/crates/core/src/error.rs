use thiserror::Error;

pub type Result<T> = std::result::Result<T, AfdmError>;

#[derive(Debug, Error)]
pub enum AfdmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),

    #[error("infeasible frame layout: {0}")]
    InfeasibleLayout(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("normal matrix is not positive definite at pivot {0}")]
    Singular(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AfdmError {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> u8 {
        match self {
            AfdmError::Config(_)
            | AfdmError::InvalidParams(_)
            | AfdmError::InfeasibleLayout(_)
            | AfdmError::InvalidProfile(_) => 2,
            AfdmError::Numerical(_) | AfdmError::Singular(_) => 3,
            _ => 1,
        }
    }
}
