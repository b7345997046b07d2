//! `alm`: calibrate, price and simulate the defaultable affine LIBOR model.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use affine_libor::ModelError;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "alm", version, about = "Defaultable affine LIBOR model")]
struct Cli {
    /// Model configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the Monte Carlo simulation, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the parameter sequences to the curves and write the model JSON.
    Calibrate,
    /// Price an instrument.
    Price(PriceArgs),
    /// Simulate paths and report survival and martingale diagnostics.
    Simulate(SimulateArgs),
    /// Write model-implied term structures at t = 0 as CSV.
    Curves(ModelArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Calibrated model file; the model is calibrated from the configuration when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Analytic,
    Mc,
    Both,
}

#[derive(Debug, Args)]
struct PriceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Closed-form/Fourier pricer, Monte Carlo, or both with the z-score of their difference.
    #[arg(long, value_enum, default_value = "analytic")]
    method: Method,
    /// Number of Monte Carlo paths, overriding the configuration.
    #[arg(long)]
    paths: Option<usize>,
    #[command(subcommand)]
    instrument: Instrument,
}

#[derive(Debug, Subcommand)]
enum Instrument {
    /// Credit default swap spread.
    Cds {
        /// Maturity index m.
        #[arg(long)]
        maturity: usize,
        /// Recovery fraction π.
        #[arg(long)]
        recovery: f64,
        /// Coupon c.
        #[arg(long, default_value_t = 0.0)]
        coupon: f64,
    },
    /// Call on the defaultable bond with fractional recovery of treasury value.
    BondOption {
        /// Exercise index i.
        #[arg(long)]
        exercise: usize,
        /// Bond maturity index m.
        #[arg(long)]
        maturity: usize,
        /// Strike K.
        #[arg(long)]
        strike: f64,
        /// Recovery fraction π.
        #[arg(long)]
        recovery: f64,
    },
    /// Call on the default-free bond written by a defaultable counterparty.
    Vulnerable {
        /// Exercise index k.
        #[arg(long)]
        exercise: usize,
        /// Bond maturity index m.
        #[arg(long)]
        maturity: usize,
        /// Strike K.
        #[arg(long)]
        strike: f64,
        /// Recovery fraction q of the option payoff.
        #[arg(long)]
        recovery: f64,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of paths, overriding the configuration.
    #[arg(long)]
    paths: Option<usize>,
    /// Also write every path as CSV to this file.
    #[arg(long)]
    dump_paths: Option<PathBuf>,
}

/// Exit codes: 0 success, 1 input or usage error, 2 infeasible calibration,
/// 3 infeasible damping.
fn exit_code(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        match cause.downcast_ref::<ModelError>() {
            Some(ModelError::Infeasible { .. }) => return 2,
            Some(ModelError::Damping { .. }) => return 3,
            _ => {}
        }
    }
    1
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("ALM_THREADS") {
        let threads: usize = value
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("ALM_THREADS must be a positive integer, got '{value}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| commands::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
