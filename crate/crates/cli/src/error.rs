use std::fmt;
use std::process::ExitCode;

use regime_vol_core::Error as CoreError;

/// Exit codes: 0 success (and "stable" for the stability command), 2 usage or
/// validation, 3 computation, 4 I/O, 10 model unstable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Validation,
    Computation,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub msg: String,
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_UNSTABLE: u8 = 10;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Usage,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Validation,
            msg: msg.into(),
        }
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Computation,
            msg: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Io,
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self.kind {
            Kind::Usage | Kind::Validation => ExitCode::from(2),
            Kind::Computation => ExitCode::from(3),
            Kind::Io => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.msg)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) | CoreError::LengthMismatch(_) => {
                CliError::validation(e.to_string())
            }
            CoreError::Numeric(_) => CliError::computation(e.to_string()),
        }
    }
}

pub fn io_err(context: &str, e: std::io::Error) -> CliError {
    CliError::io(format!("{context}: {e}"))
}
