//! `dprh`: evaluate, simulate and fit dynamic proportional reversed hazards
//! models for paired left-censored lifetimes.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] dprh::DprhError),
    /// The computation ran but did not reach a trustworthy result.
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("error: cannot set up {} threads: {e}", cli.global.threads);
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Eval(a) => commands::eval(&cli.global, a),
        Command::Simulate(a) => commands::simulate(&cli.global, a),
        Command::FitMle(a) => commands::fit_mle(&cli.global, a),
        Command::FitBayes(a) => commands::fit_bayes(&cli.global, a),
        Command::Study(a) => commands::study(&cli.global, a),
        Command::AnalyzeTwins(a) => commands::analyze_twins(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
