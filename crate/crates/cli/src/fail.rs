use std::fmt;

use normshift::Error;

pub const EXIT_IO: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

/// An error on its way to becoming a process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: EXIT_IO, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INVALID, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure { code: EXIT_RUNTIME, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
            Error::Invalid(_) => EXIT_INVALID,
            Error::Parameter(_)
            | Error::Infeasible(_)
            | Error::Sampling(_)
            | Error::Separation(_)
            | Error::Analysis(_) => EXIT_RUNTIME,
        };
        Failure { code, message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;
