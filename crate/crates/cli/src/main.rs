use std::process::ExitCode;

use clap::Parser;

mod commands;

use commands::Cli;

/// Exit codes: 0 success, 2 usage, 3 data/format, 4 numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<headrank_core::Error>() {
            return if e.is_numerical() { 4 } else { 3 };
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
