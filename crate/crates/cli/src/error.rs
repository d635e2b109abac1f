use std::fmt;

/// Exit code 2 for bad input, 1 for anything else.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn internal(e: impl fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<topoinf::Error> for CliError {
    fn from(e: topoinf::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}
