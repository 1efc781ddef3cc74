//! `twosided`: check, schedule and benchmark packet transmission instances.
//!
//! Exit status: 0 success, 1 negative answer (infeasible instance, oracle
//! mismatch), 2 input or output error, 3 insufficient energy budget.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod check;
mod error;
mod instance;
mod schedule;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twosided_core::CostKind;

use crate::error::CliError;
use crate::schedule::{ObjectiveArg, ScheduleArgs};
use crate::sweep::{Figure, SweepArgs};

#[derive(Debug, Parser)]
#[command(name = "twosided", version, about = "Packet scheduling under pre- and post-transmission delay bounds")]
struct Cli {
    /// Worker threads for sweeps (defaults to one per core).
    #[arg(long, global = true, env = "TWOSIDED_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CostArg {
    Inverse,
    Shannon,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report feasibility, departure regions and the segment decomposition.
    Check {
        instance: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print an instance file in canonical form.
    Fmt { instance: PathBuf },
    /// Compute an energy-optimal or completion-time-optimal schedule.
    Schedule {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "energy")]
        objective: ObjectiveArg,
        /// Also solve with the numerical oracle and fail on disagreement.
        #[arg(long)]
        oracle_check: bool,
        /// Energy budget; overrides `w_max` from the file.
        #[arg(long)]
        w_max: Option<f64>,
        /// Write here instead of stdout; a `.csv` extension selects per-packet CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized comparison against the baseline schedulers.
    Sweep {
        #[arg(long, value_enum)]
        figure: Option<Figure>,
        /// Objective of a custom sweep (implied by --figure).
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        packets: Option<usize>,
        #[arg(long)]
        reference_time: Option<f64>,
        /// Half-width T of each packet's departure region.
        #[arg(long)]
        window: Option<f64>,
        /// Axis values: windows for energy sweeps, budgets for time sweeps.
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "inverse")]
        cost: CostArg,
        /// Bits per packet for the Shannon cost.
        #[arg(long, default_value_t = 1.0)]
        bits: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Check { instance, json } => {
            let feasible = check::run(&instance, json)?;
            Ok(if feasible { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Fmt { instance } => {
            let file = instance::InstanceFile::read(&instance)?;
            file.instance()?;
            println!("{}", file.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Schedule {
            instance,
            objective,
            oracle_check,
            w_max,
            out,
        } => {
            schedule::run(&ScheduleArgs {
                path: instance,
                objective,
                oracle_check,
                w_max,
                out,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            figure,
            objective,
            trials,
            seed,
            packets,
            reference_time,
            window,
            ladder,
            cost,
            bits,
            out_dir,
        } => {
            if !(bits > 0.0 && bits.is_finite()) {
                return Err(CliError::Input(format!("--bits must be positive, got {bits}")));
            }
            let cost = match cost {
                CostArg::Inverse => CostKind::Inverse,
                CostArg::Shannon => CostKind::Shannon { bits },
            };
            sweep::run(&SweepArgs {
                figure,
                objective,
                trials,
                seed,
                packets,
                reference_time,
                window,
                ladder,
                cost,
                out_dir,
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::InsufficientBudget { required, .. } = e {
                println!("minimal budget: {required}");
            }
            e.exit_code()
        }
    }
}
