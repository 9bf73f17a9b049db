use std::fmt;
use std::process::ExitCode;

use rmcal_core::ErrorClass;

/// Process exit statuses.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 1 | file could not be read or written |
/// | 2 | invalid arguments or configuration |
/// | 3 | malformed input data |
/// | 4 | solver failed or did not converge |
/// | 5 | a simulation oracle check failed |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Io = 1,
    Usage = 2,
    Ingest = 3,
    Solver = 4,
    Oracle = 5,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        ExitCode::from(s as u8)
    }
}

/// An error that carries its own exit status.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(status: Status, message: impl Into<String>) -> anyhow::Error {
    Failure {
        status,
        message: message.into(),
    }
    .into()
}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    fail(Status::Usage, message)
}

/// Picks the status of the innermost classified cause.
pub fn classify(err: &anyhow::Error) -> Status {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.status;
        }
        if let Some(e) = cause.downcast_ref::<rmcal_core::Error>() {
            return match e.class() {
                ErrorClass::Io => Status::Io,
                ErrorClass::Ingest => Status::Ingest,
                ErrorClass::Usage => Status::Usage,
                ErrorClass::Solver => Status::Solver,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return Status::Ingest;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return Status::Io;
        }
    }
    Status::Io
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn context_does_not_hide_the_class() {
        let e: anyhow::Result<()> = Err(rmcal_core::Error::UnknownModel("x".into())).context("loading");
        assert_eq!(classify(&e.unwrap_err()), Status::Usage);
        assert_eq!(classify(&fail(Status::Oracle, "x")), Status::Oracle);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(classify(&anyhow::Error::new(io)), Status::Io);
    }
}
