//! Command-line front end: scenario configuration, batch execution and CSV
//! reports.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;

use std::io::Write;

pub use args::{parse_args, parse_args_with_env, Command, ConfigFile, RunConfig, THREADS_ENV};
pub use commands::{execute, Outcome, ORACLE_TOLERANCE_SE};
pub use error::CliError;
pub use report::{emit_csv, read_csv, write_csv, HEADER};

/// Parses `argv`, runs it and returns the process exit status: 0 on
/// success, 1 when a scenario errors or a check fails, 2 on bad usage.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_args(argv).and_then(|config| execute(&config, stdout, stderr));
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(CliError::Clap(e)) => {
            // help and version land here too, with exit code 0
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            e.exit_code()
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
