//! Command-line front end: batch experiment runs, sweeps, and the fast
//! invariant check suite.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use vgc_lab::cli::{self, CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "vgc-lab",
    version,
    about = "Debiased policy evaluation experiments"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON config and write a CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides the config's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to VGC_LAB_WORKERS or all cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a scenario once per grid point along one axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axis to sweep: h | n | folds | snr.
        #[arg(long)]
        axis: String,
        /// Comma-separated grid values, e.g. 0.3,0.1,0.03.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the fast invariant suite and print per-property counts.
    Check {
        #[arg(long, default_value_t = 20240)]
        seed: u64,
        /// Randomized cases per property.
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
        } => {
            let cfg = cli::load_config(&config)?;
            let overrides = Overrides { seed, workers, out };
            let started = Instant::now();
            let summary = cli::cmd_run(&cfg, &overrides)?;
            eprintln!(
                "wrote {} rows to {} in {:.1}s",
                summary.rows,
                summary.output.display(),
                started.elapsed().as_secs_f64()
            );
            Ok(())
        }
        Command::Sweep {
            config,
            axis,
            grid,
            out,
            seed,
            workers,
        } => {
            let cfg = cli::load_config(&config)?;
            let overrides = Overrides { seed, workers, out };
            let started = Instant::now();
            let summary = cli::cmd_sweep(&cfg, &axis, &grid, &overrides)?;
            eprintln!(
                "wrote {} rows to {} in {:.1}s",
                summary.rows,
                summary.output.display(),
                started.elapsed().as_secs_f64()
            );
            Ok(())
        }
        Command::Check { seed, cases } => {
            let report = cli::cmd_check(seed, cases);
            print!("{}", report.render());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Runtime("invariant checks failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
