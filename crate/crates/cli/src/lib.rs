//! Command-line frontend. [`run`] parses arguments, executes one
//! subcommand, writes its artifacts and prints a report.
//!
//! Exit codes: 0 success, 2 bad input (validation or I/O), 3 numeric
//! failure.

mod args;
mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;
use rigkit::{Error, ErrorKind};

pub use args::{Cli, Command, Format};
pub use config::{sha256_hex, RunConfig};
pub use report::{Report, REPORT_SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Numeric => EXIT_NUMERIC,
        ErrorKind::Validation | ErrorKind::Io => EXIT_VALIDATION,
    }
}

/// Run with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Run with explicit output streams; the report goes to `out` unless
/// `--report` names a file.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => match report.emit(cli.global.format, cli.global.report.as_deref(), out) {
            Ok(()) => EXIT_OK,
            Err(e) => fail(&e, err),
        },
        Err(e) => fail(&e, err),
    }
}

fn fail(e: &Error, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {}: {e}", e.name());
    exit_code(e)
}

/// Execute a parsed command and build its report without printing it.
pub fn execute(cli: &Cli) -> rigkit::Result<Report> {
    let start = Instant::now();
    let mut cfg = RunConfig::resolve(cli.global.config.as_deref(), cli.global.seed, cli.global.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let outcome = pool.install(|| commands::dispatch(&cli.command, &mut cfg))?;
    Report::build(&cli.command, &cfg, threads, outcome, start.elapsed())
}
