//! `rmcal`: calibrate reward-model scores against Elo ratings, build
//! preference datasets, and analyze them. Exit statuses are listed on
//! [`exit::Status`].

mod cli;
mod commands;
mod exit;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::IngestCheck(a) => commands::ingest_check(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::CalibrateJoint(a) => commands::calibrate_joint(a),
        Command::Md(a) => commands::md(a),
        Command::BuildPrefs(a) => commands::build_prefs(a),
        Command::Patterns(a) => commands::patterns(a),
        Command::Zscore(a) => commands::zscore(a),
        Command::Btloss(a) => commands::btloss(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::classify(&e).into()
        }
    }
}
