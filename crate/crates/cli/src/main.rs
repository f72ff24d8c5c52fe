//! `hofs` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 data or I/O error,
//! 4 numeric failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::commands::Globals;
use crate::output::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if cli.version {
        println!(
            "{}",
            serde_json::json!({ "name": env!("CARGO_BIN_NAME"), "version": env!("CARGO_PKG_VERSION") })
        );
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        None => Err(CliError::Config("no command given; see --help".into())),
        Some(command) => configure_threads(cli.threads).and_then(|()| {
            let globals = Globals {
                out_dir: cli.out_dir,
                threads: cli.threads,
                config_dump: cli.config_dump,
            };
            commands::run(command, &globals)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    match threads {
        None => Ok(()),
        Some(0) => Err(CliError::Config("thread count must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {n} threads: {e}"))),
    }
}
