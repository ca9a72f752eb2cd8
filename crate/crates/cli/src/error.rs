use std::fmt;

/// Failure of a CLI run, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(ris_corr::Error),
    Io(String),
}

impl CliError {
    pub fn config(field: &str, reason: impl fmt::Display) -> Self {
        CliError::Config(format!("field `{field}`: {reason}"))
    }

    /// 2 config, 3 capacity, 4 numerical contract, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        use ris_corr::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidParameter { .. } | E::OutOfDomain(_) | E::Index { .. }) => 2,
            CliError::Core(E::Capacity { .. }) => 3,
            CliError::Core(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e @ ris_corr::Error::Capacity { .. }) => {
                write!(f, "{e} (raise --mem-budget)")
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ris_corr::Error> for CliError {
    fn from(e: ris_corr::Error) -> Self {
        CliError::Core(e)
    }
}
