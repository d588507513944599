use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use travelwave::cli::{self, ExperimentConfig};
use travelwave::iterate::Termination;

#[derive(Parser)]
#[command(
    name = "travelwave",
    version,
    about = "Accelerated Petviashvili solvers for traveling waves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one (accelerated) solve and write trace, profile and summary.
    Solve { config: PathBuf },
    /// Run every cell of the `[sweep]` section.
    Sweep { config: PathBuf },
    /// Leading eigenvalues of the linearized maps at a profile.
    Diagnose { config: PathBuf, profile: PathBuf },
    /// Run the invariant suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> travelwave::Result<ExitCode> {
    match cli.command {
        Command::Solve { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (outcome, written) = cli::run_experiment(&cfg)?;
            print!("{}", outcome.summary.to_json());
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(if outcome.summary.reason == Termination::Converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Sweep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = cli::sweep(&cfg)?;
            print!("{}", table.to_csv());
            Ok(if table.rows.iter().any(|r| r.reason == Termination::Converged) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Diagnose { config, profile } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = cli::diagnose(&cfg, &profile)?;
            print!("{}", report.to_csv());
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { seed } => {
            let checks = cli::selftest(seed);
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                println!(
                    "{} {} (worst {:e}, tolerance {:e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
