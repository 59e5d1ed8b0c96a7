//! `sogcn`: dataset generation, training, evaluation, depth sweeps,
//! spectrum export, filter factorization and LSS probing.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use sogcn_core::Error;

use crate::args::Cli;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) | Error::Shape { .. } => 1,
        Error::Io { .. } | Error::Format(_) => 2,
        Error::Numeric(_) | Error::Contract(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
