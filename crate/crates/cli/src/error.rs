use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violated: {}", .0.join("; "))]
    Invariant(Vec<String>),

    #[error(transparent)]
    Core(#[from] spincharge::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for invariant violations, 3 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use spincharge::Error as E;
        match self {
            CliError::Config(_) => 3,
            CliError::Invariant(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidProfile(_)
                | E::NegativeRadius(_)
                | E::InvalidGrid(_)
                | E::UnderResolved { .. }
                | E::InvalidArgument(_)
                | E::Config(_)
                | E::Json(_) => 3,
                E::NonFinite { .. } | E::InvariantViolation(_) => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
        }
    }
}
