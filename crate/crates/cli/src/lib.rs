//! Pipeline driver behind the `trafficsim` binary.
//!
//! Exit codes: 0 on success, 2 when inputs or options fail validation, 3
//! when a run fails after its inputs were accepted.

mod args;
mod bench;
mod commands;
mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fmt;

use clap::{CommandFactory, FromArgMatches};

pub use args::{Cli, Command, ControllerKind};
pub use bench::{BenchRow, BenchTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (label, e) = match self {
            CliError::Validation(e) => ("invalid input", e),
            CliError::Runtime(e) => ("run failed", e),
        };
        write!(f, "{label}: {}", chain(e))
    }
}

/// Error chain joined by `: `, skipping causes their parent already quotes.
fn chain(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if text.ends_with(&msg) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&msg);
    }
    text
}

impl std::error::Error for CliError {}

pub(crate) trait Classify<T> {
    fn invalid(self) -> Result<T, CliError>;
    fn failed(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Validation(e.into()))
    }

    fn failed(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(e.into()))
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match try_run(&args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn try_run(args: &[OsString]) -> Result<(), CliError> {
    let merged = config::merge_args(args, config::find_config(args).as_deref()).invalid()?;
    // Config tokens come first, so a repeated flag must replace them.
    let matches = Cli::command()
        .args_override_self(true)
        .mut_subcommands(|c| c.args_override_self(true))
        .try_get_matches_from(&merged)
        .map_err(clap_error)?;
    let cli = Cli::from_arg_matches(&matches).map_err(clap_error)?;
    let command_line = std::iter::once("trafficsim".to_string())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect();
    commands::dispatch(cli, command_line)
}

fn clap_error(e: clap::Error) -> CliError {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            std::process::exit(EXIT_OK);
        }
        _ => {
            let text = e.render().to_string();
            let text = text.strip_prefix("error: ").unwrap_or(&text).trim_end().to_string();
            CliError::Validation(anyhow::anyhow!(text))
        }
    }
}
