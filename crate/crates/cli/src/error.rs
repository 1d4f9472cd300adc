use thiserror::Error;

/// Exit status of a successful run with no bound failures.
pub const EXIT_PASS: i32 = 0;
/// At least one checker reported a failure.
pub const EXIT_FAILURE: i32 = 1;
/// Bad arguments, unreadable or invalid input.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Core(#[from] qrf::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}
