//! `bgchurn`: batch workflows around the BG/NBD churn engine.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 unidentifiable
//! parameters, 4 numerical-consistency failure.

mod check;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use bgnbd_core::Error;
use chrono::NaiveDate;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bgchurn", version, about = "BG/NBD churn-window scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate a transaction log into per-customer (x, t_x, T) summaries.
    Ingest {
        #[arg(long)]
        transactions: PathBuf,
        /// Scoring date, YYYY-MM-DD.
        #[arg(long = "as-of")]
        as_of: NaiveDate,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit r, alpha, a, b by maximum likelihood.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Starting point as `r,alpha,a,b`.
        #[arg(long, value_parser = parse_init)]
        init: Option<[f64; 4]>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// Objective tolerance of the simplex search.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Score churn probabilities for a window of M days.
    Score {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Inactivity window M in days.
        #[arg(long)]
        window: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Simulate a cohort from the generative model.
    Simulate {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        customers: usize,
        /// Observation period in days.
        #[arg(long)]
        horizon: f64,
        /// Extra simulated days after the horizon.
        #[arg(long, default_value_t = 0.0)]
        holdout: f64,
        #[arg(long)]
        seed: u64,
        /// Output prefix; writes `<prefix>_transactions.csv`,
        /// `<prefix>_truth.csv` and, with a holdout, `<prefix>_holdout.csv`.
        #[arg(long)]
        output: String,
    },
    /// Compare the stable evaluator with the direct one on random summaries.
    Check {
        #[arg(long)]
        params: PathBuf,
        /// Random summaries per frequency level.
        #[arg(long = "grid-size", default_value_t = 100)]
        grid_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_init(raw: &str) -> Result<[f64; 4], String> {
    let values: Vec<f64> = raw
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// `check` found a discrepancy or a non-finite stable value.
    CheckFailed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Unidentifiable(_)) => 3,
            Failure::Core(Error::Consistency(_) | Error::NumericRange(_)) => 4,
            Failure::Core(_) => 2,
            Failure::CheckFailed(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => e.fmt(f),
            Failure::CheckFailed(msg) => f.write_str(msg),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest {
            transactions,
            as_of,
            output,
        } => commands::ingest(&transactions, as_of, &output),
        Command::Fit {
            input,
            output,
            init,
            max_iter,
            tol,
        } => commands::fit(&input, &output, init, max_iter, tol),
        Command::Score {
            params,
            input,
            window,
            output,
        } => commands::score(&params, &input, window, &output),
        Command::Simulate {
            r,
            alpha,
            a,
            b,
            customers,
            horizon,
            holdout,
            seed,
            output,
        } => commands::simulate([r, alpha, a, b], customers, horizon, holdout, seed, &output),
        Command::Check {
            params,
            grid_size,
            seed,
        } => check::run(&params, grid_size, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
