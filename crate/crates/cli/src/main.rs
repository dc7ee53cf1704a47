use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flatlab_cli::{exit_code, run_command, Overrides, RunConfig};

/// Experiments for |p + ∇u|^γ F(D²u) = f on the unit ball.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 insufficient data.
#[derive(Parser)]
#[command(name = "flatlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Dirichlet problem; writes solution.csv and solve.json.
    Solve(Overrides),
    /// Oscillation profile and fitted exponent; writes profile.csv and
    /// regularity.json (sweep.csv with --sweep-gamma).
    Regularity(Overrides),
    /// Flatness step and trace; writes flatness.csv and flatness.json.
    Flatness(Overrides),
    /// Doubling-of-variables certificate; writes doubling.json.
    Doubling(Overrides),
    /// Degenerate versus uniformly elliptic solves with f = 0; writes
    /// equivalence.json and touching.csv.
    Equivalence(Overrides),
    /// Randomized Pucci operator checks; writes proptest.json.
    Proptest(Overrides),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, ov) = match &cli.command {
        Command::Solve(o) => ("solve", o),
        Command::Regularity(o) => ("regularity", o),
        Command::Flatness(o) => ("flatness", o),
        Command::Doubling(o) => ("doubling", o),
        Command::Equivalence(o) => ("equivalence", o),
        Command::Proptest(o) => ("proptest", o),
    };
    let result = RunConfig::load(name, ov).and_then(|cfg| run_command(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flatlab {name}: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
