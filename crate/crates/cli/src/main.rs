use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srep_cli::{describe, run_scenario, selftest, CliError, Scenario};

#[derive(Parser)]
#[command(name = "srepsim", version, about = "Simulate and analyze pool synchronization by set reconciliation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSVs.
    Run {
        scenario: PathBuf,
        /// Output directory; overrides the scenario's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved plan of a scenario without running it.
    Describe {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the protocol invariants on small graphs.
    Selftest,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::Run { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let dir = out.unwrap_or_else(|| s.output.clone());
            for f in run_scenario(&s, &dir)? {
                println!("{}", f.display());
            }
        }
        Command::Describe { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let dir = out.unwrap_or_else(|| s.output.clone());
            print!("{}", describe(&s, &dir));
        }
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                match &c.failure {
                    None => println!("PASS {}", c.name),
                    Some(why) => println!("FAIL {}: {why}", c.name),
                }
            }
            if checks.iter().any(|c| c.failure.is_some()) {
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
