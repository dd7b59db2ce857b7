//! `bodt`: plan, compare and simulate bags of distributed tasks.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 1;
    pub const INTERNAL: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const ORACLE_CAP: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(
    name = "bodt",
    version,
    about = "Cost-aware planning for bags of distributed tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pick the best candidate plan for one β.
    Plan(PlanArgs),
    /// Pick plans for a list of β values and report the full score matrix.
    Sweep(SweepArgs),
    /// Find a plan that fits a block budget.
    Budget(BudgetArgs),
    /// Compare the chosen plan with the single-site plan.
    Compare(PlanArgs),
    /// Replay plans in the simulator and compare with predictions.
    Simulate(SimulateArgs),
    /// Solve a small instance exactly and report the heuristic's gap.
    Oracle(PlanArgs),
    /// Write a synthetic scenario file.
    Generate(GenerateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PlanArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Weight of makespan against cost, in [0, 1].
    #[arg(long)]
    pub beta: f64,
    /// JSON report path; CSV tables are written beside it. Stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated β values. Defaults to 0.0, 0.1, …, 1.0.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Largest acceptable number of billed blocks.
    #[arg(long)]
    pub budget: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Canonical,
    ById,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Plan file: a bare plan document or a `plan` report. Without it every
    /// candidate plan and the single-site plan are simulated.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Marks the candidate this β would choose.
    #[arg(long, conflicts_with = "plan")]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub reps: u64,
    /// Log-normal sigma of the transfer-time noise; 0 replays the model.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Task order within a site, for the trace files.
    #[arg(long, value_enum, default_value_t = Order::Canonical)]
    pub order: Order,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 47)]
    pub locations: usize,
    #[arg(long, default_value_t = 8)]
    pub sites: usize,
    #[arg(long, default_value_t = 3290)]
    pub tasks: usize,
    #[arg(long, default_value_t = 0.5)]
    pub size_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub size_max: f64,
    /// Transfer rate, s/unit, to the nearest point of the ring.
    #[arg(long, default_value_t = 0.2)]
    pub transfer_min: f64,
    /// Transfer rate, s/unit, to the opposite side of the ring.
    #[arg(long, default_value_t = 6.0)]
    pub transfer_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub compute_rate: f64,
    #[arg(long, default_value_t = 120.0)]
    pub deploy_time: f64,
    #[arg(long, default_value_t = 3600.0)]
    pub block_seconds: f64,
    #[arg(long, default_value_t = 1.0)]
    pub unit_cost: f64,
}

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: exit::INPUT,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: exit::INTERNAL,
            error: error.into(),
        }
    }
}

impl From<bodt_core::Error> for Failure {
    fn from(e: bodt_core::Error) -> Self {
        let code = match e {
            bodt_core::Error::CapExceeded { .. } => exit::ORACLE_CAP,
            _ => exit::INPUT,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::INPUT
            } else {
                exit::OK
            });
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Budget(a) => commands::budget(a),
        Command::Compare(a) => commands::compare(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Generate(a) => commands::generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("bodt: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
