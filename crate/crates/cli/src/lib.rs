//! The `geodesica` command line: subcommands for each stage, JSON-configured
//! pipelines, run manifests and replay.

pub mod commands;
pub mod error;
pub mod pipeline;
pub mod presets;
pub mod run;
pub mod stages;
pub mod svg;

use std::ffi::OsString;

use clap::Parser;

use crate::commands::{execute, Cli};
use crate::error::{CliError, CliResult};

/// Caps the worker pool.
pub const THREADS_ENV: &str = "GEODESICA_THREADS";

fn configure_threads() -> CliResult<()> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let n = raw
        .to_str()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool built earlier in this process stays in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn try_run(args: &[OsString]) -> CliResult<()> {
    configure_threads()?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    let recorded: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    execute(cli, &recorded).map(|_| ())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
/// Failures print `{"error": {"kind", "message"}}` on stderr.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString>>) -> i32 {
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match try_run(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
