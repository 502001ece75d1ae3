use std::fmt;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config keys or values. Exit code 2.
    Config(String),
    /// Solver or numerical failure; the message carries `(k, h, p)` where known. Exit code 3.
    Solver(String),
    /// Reading inputs or writing outputs failed. Exit code 4.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<helmholtz_hp::Error> for CliError {
    fn from(e: helmholtz_hp::Error) -> Self {
        use helmholtz_hp::Error as E;
        match e {
            E::Solver { .. } => CliError::Solver(e.to_string()),
            E::Numeric(_) => CliError::Solver(format!("solver failure: {e}")),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
