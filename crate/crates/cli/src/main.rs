//! `gapcert`: gap probabilities of unitary ensembles and residual checks of
//! their integrable structure.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! configuration and precondition errors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gapcert", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gap probability det(I - K_n^J) for each n.
    Gap(commands::GapArgs),
    /// Run the finite-n identity checks and print JSON-lines reports.
    Verify(commands::VerifyArgs),
    /// Finite-difference residuals of the PDE system on a (ξ, t) rectangle.
    Pde(commands::PdeArgs),
    /// Painlevé IV (Gaussian) or V (Laguerre) residuals along ξ at t = 0.
    Painleve(commands::PainleveArgs),
    /// Brute-force gap probability: nested quadrature or Monte Carlo.
    Oracle(commands::OracleArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gap(a) => commands::gap(a),
        Command::Verify(a) => commands::verify(a),
        Command::Pde(a) => commands::pde(a),
        Command::Painleve(a) => commands::painleve(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
