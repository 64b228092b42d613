mod args;
mod bench;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::GenMatrix(a) => commands::gen_matrix(a),
        Command::Compress(a) => commands::compress(a),
        Command::Recover(a) => commands::recover_cmd(a),
        Command::DwtExpand(a) => commands::dwt_expand(a),
        Command::Bench(a) => bench::bench(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on its own usage errors.
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
