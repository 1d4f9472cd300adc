//! Batch front end: scenario files in, JSONL reports and plot-ready CSV out.

pub mod cli;
pub mod error;
pub mod output;
pub mod presets;
pub mod scenario;
pub mod tradeoff;
pub mod verify;
pub mod width;

pub use error::{CliError, EXIT_FAILURE, EXIT_PASS, EXIT_USAGE};

/// Sizes the global thread pool from `QRF_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QRF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("QRF_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}
