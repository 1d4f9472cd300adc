use std::process::ExitCode;

use clap::Parser;

use qrf_cli::cli::{run, Cli};
use qrf_cli::configure_threads;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = configure_threads().and_then(|()| run(cli)).unwrap_or_else(|e| {
        eprintln!("qrf: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
