use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("policy file {path} was trained on scenario hash {found}, current scenario hash is {expected}")]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("training infeasible for {0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dmimo_core::Error),
}

impl SimError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io { context: context.into(), source }
    }

    /// Process exit code: 1 usage or configuration, 2 infeasible training,
    /// 3 numerical or internal failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Parse { .. }
            | SimError::Config { .. }
            | SimError::Usage(_)
            | SimError::HashMismatch { .. }
            | SimError::Io { .. } => 1,
            SimError::Infeasible(_) => 2,
            SimError::Core(dmimo_core::Error::InvalidScenario { .. }) => 1,
            SimError::Core(dmimo_core::Error::InfeasibleUser { .. }) => 2,
            SimError::Core(_) => 3,
        }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
