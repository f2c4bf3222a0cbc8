use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spde_core::harness::{self, RunRequest};
use spde_core::verify;

/// Stochastic Allen–Cahn convergence studies.
#[derive(Parser)]
#[command(name = "spde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long, env = "SPDE_WORKERS")]
        workers: Option<usize>,
        /// Overrides the seed in the study file.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write rates.svg.
        #[arg(long)]
        plot: bool,
        /// Estimate weak errors from independent paths.
        #[arg(long)]
        independent: bool,
        /// Overwrite an existing manifest.
        #[arg(long)]
        force: bool,
        /// Also write the reference noise path of sample 0.
        #[arg(long)]
        dump_noise: bool,
    },
    /// Run the built-in oracle checks.
    Verify,
    /// Re-run a recorded study and compare its CSV byte for byte.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = "SPDE_WORKERS")]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> spde_core::Result<ExitCode> {
    match command {
        Command::Run {
            config,
            out,
            workers,
            seed,
            plot,
            independent,
            force,
            dump_noise,
        } => {
            let outcome = harness::execute_run(&RunRequest {
                config,
                out,
                workers,
                seed,
                plot,
                independent,
                force,
                dump_noise,
            })?;
            print!("{}", harness::summary(&outcome.table));
            println!(
                "wrote {} and {} in {:.1} s",
                outcome.csv_path.display(),
                outcome.manifest_path.display(),
                outcome.manifest.run.wall_time_secs
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let checks = verify::quick_suite()?;
            for check in &checks {
                println!("{check}");
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Replay { manifest, workers } => {
            let outcome = harness::replay(&manifest, workers)?;
            if outcome.matches {
                println!("replay matches {}", outcome.csv_path.display());
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("replay differs from {}", outcome.csv_path.display());
                eprintln!("recorded:\n{}reproduced:\n{}", outcome.recorded, outcome.reproduced);
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
