//! Command-line front end for the `uniest` library.
//!
//! Every subcommand prints a report
//! `{schema, command, config, results, checks, timestamp?}` (or CSV) and
//! exits with [`EXIT_OK`] only if all of its checks pass.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use config::{Cli, Command, Format, RunConfig};
pub use report::{Check, Report};

pub const EXIT_OK: i32 = 0;
/// Some asserted check failed; the failures are listed on stderr.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<uniest::Error> for CliError {
    fn from(e: uniest::Error) -> Self {
        match e {
            uniest::Error::Input(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

/// Resolves the configuration and runs the command on a pool of
/// `cfg.workers` threads (rayon's default when unset).
pub fn execute(command: &Command) -> Result<(RunConfig, Report), CliError> {
    let cfg = command.resolve()?;
    let report = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| commands::run(&cfg))?,
        None => commands::run(&cfg)?,
    };
    Ok((cfg, report))
}

/// Full program: parse, run, write, and return the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command).and_then(|(cfg, report)| write_report(&cfg, &report).map(|_| report)) {
        Ok(report) => {
            let failures = report.failures();
            if failures.is_empty() {
                EXIT_OK
            } else {
                let msg = serde_json::json!({ "failed": failures });
                eprintln!("{}", serde_json::to_string_pretty(&msg).expect("serializable"));
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            e.exit_code()
        }
    }
}

fn write_report(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    let text = report.render(cfg.format);
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            // a closed pipe (`| head`) is not an error
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}
