//! `eegforge`: forge self-labeled EEG pre-training datasets, benchmark
//! pre-training arms, and compare pre-trained against fresh models.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod args;
mod bench;
mod compare;
mod error;
mod forge;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    // Usage errors exit with 2 inside clap.
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match &cli.command {
        Command::Forge(a) => forge::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Compare(a) => compare::run(a),
        Command::Report(a) => bench::report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
