//! `cuelens`: failure-mode diagnostics over training-run telemetry.

mod cli;
mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use cli::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("usage: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("usage: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::dispatch(&cli.command) {
        Ok(outcome) if outcome.degenerate.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("degenerate: {}", outcome.degenerate.join("; "));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
