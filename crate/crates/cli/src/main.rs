#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CheckOptions;
use crate::error::CliError;

/// Stochastic variance-reduced cubic regularization experiments.
#[derive(Parser)]
#[command(name = "svrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer described by a TOML file and write its trace CSV.
    Run { config: PathBuf },
    /// Run every entry of a suite file, then write per-run CSVs and SVG plots.
    Suite { config: PathBuf },
    /// Finite-difference derivative check and Hessian-Lipschitz estimate.
    Check {
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
        /// Shifts every gradient by this constant.
        #[arg(long, hide = true, allow_hyphen_values = true)]
        corrupt_gradient: Option<f64>,
    },
    /// Solve a cubic model read from JSON and print the report.
    SolveSubproblem {
        model: PathBuf,
        #[arg(long, default_value_t = svrc_core::cubic::DEFAULT_TOL)]
        tol: f64,
        /// Use the Lanczos solver with at most this many Krylov vectors.
        #[arg(long)]
        lanczos: Option<usize>,
    },
    /// Print the theoretical parameter defaults and their recursion report.
    Defaults {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run { config } => commands::run(&config),
        Command::Suite { config } => commands::suite(&config),
        Command::Check {
            config,
            points,
            step,
            pairs,
            threshold,
            corrupt_gradient,
        } => commands::check(
            &config,
            &CheckOptions {
                points,
                step,
                pairs,
                threshold,
                corrupt_gradient,
            },
        ),
        Command::SolveSubproblem {
            model,
            tol,
            lanczos,
        } => commands::solve_subproblem(&model, tol, lanczos),
        Command::Defaults { n, d, rho, c } => commands::defaults(n, d, rho, c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e {
                CliError::Usage(_) => "usage error",
                CliError::Data(_) => "error",
                CliError::Numerical(_) => "numerical failure",
            };
            eprintln!("svrc: {kind}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
