//! `mcvd`: channel models and particle simulation for molecular SIMO links.

mod commands;
mod output;
mod topo;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcvd_core::closed_form::DEFAULT_TRUNCATION_EPS;
use mcvd_core::scenarios::{DEFAULT_HORIZON, DEFAULT_MODEL_DT, DEFAULT_MOLECULES, DEFAULT_SIM_DT};
use mcvd_core::ModelKind;

use topo::TopologyArgs;

/// Bad user input: exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

/// Failure writing or reading files: exit code 4.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct OutputError(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "mcvd",
    version,
    about = "Molecular SIMO channel models and particle simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Discrete-time comprehensive recursion (any receiver count).
    Recursive,
    /// Closed-form series (one or two receivers).
    Closed,
    /// Closed-form leading-term approximation (one or two receivers).
    Approx,
    /// Discrete-time approximation (any receiver count).
    ApproxRecursive,
}

impl ModelArg {
    pub fn kind(self, eps: f64) -> ModelKind {
        match self {
            ModelArg::Recursive => ModelKind::Recursive,
            ModelArg::Closed => ModelKind::Closed { eps },
            ModelArg::Approx => ModelKind::ApproxClosed,
            ModelArg::ApproxRecursive => ModelKind::Approx,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Time step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Horizon (s).
    #[arg(long = "t", default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-receiver hitting rate and fraction: `t,pdf,cdf`.
    Siso {
        /// Transmitter-to-center distance (um).
        #[arg(long)]
        r0: f64,
        /// Receiver radius (um).
        #[arg(long)]
        rr: f64,
        #[arg(long = "diffusion", short = 'D', default_value_t = mcvd_core::scenarios::DEFAULT_DIFFUSION)]
        diffusion: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Output CSV; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-receiver model curves.
    Simo {
        #[command(flatten)]
        topology: TopologyArgs,
        #[arg(long, value_enum, default_value_t = ModelArg::Recursive)]
        model: ModelArg,
        /// Series truncation threshold for `closed`.
        #[arg(long, default_value_t = DEFAULT_TRUNCATION_EPS)]
        eps: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brownian particle simulation.
    Simulate {
        #[command(flatten)]
        topology: TopologyArgs,
        /// Molecule count.
        #[arg(long = "n", default_value_t = DEFAULT_MOLECULES)]
        n_molecules: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Bin width of the output curves (s); defaults to 1e-3.
        #[arg(long)]
        curve_dt: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Take every step individually, also far from the receivers.
        #[arg(long)]
        no_leap: bool,
        /// Hit-record CSV.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Polar heatmap spec, e.g. "rx=1 bins=18".
        #[arg(long)]
        heatmap: Option<String>,
        /// Heatmap CSV; defaults to `<out stem>_heatmap_rxK.csv`.
        #[arg(long)]
        heatmap_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compares the cumulative columns of two curve CSVs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Interpolate `b` onto the time grid of `a`.
        #[arg(long)]
        resample: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-vs-simulation errors over separation angles.
    Sweep {
        #[command(flatten)]
        topology: TopologyArgs,
        /// Degrees: `start:stop:step` or a comma list.
        #[arg(long, default_value = "10:180:10")]
        angles: String,
        #[arg(long, value_enum, default_value_t = ModelArg::Recursive)]
        model: ModelArg,
        #[arg(long, default_value_t = DEFAULT_TRUNCATION_EPS)]
        eps: f64,
        /// Simulation settings, e.g. "N=5e4,dt=1e-4,seed=1".
        #[arg(long, default_value = "N=5e4")]
        mc: String,
        /// Comparison grid step (s).
        #[arg(long, default_value_t = DEFAULT_MODEL_DT)]
        curve_dt: f64,
        #[arg(long = "t", default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        /// Leave out the half- and no-eclipse rows.
        #[arg(long)]
        no_eclipse_rows: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use mcvd_core::Error as E;
    for cause in err.chain() {
        if cause.is::<OutputError>() || cause.is::<std::io::Error>() {
            return 4;
        }
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::RocViolation { .. } => 3,
                E::Io(_) | E::Csv(_) => 4,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Siso {
            r0,
            rr,
            diffusion,
            grid,
            out,
        } => commands::siso(r0, rr, diffusion, &grid, out),
        Command::Simo {
            topology,
            model,
            eps,
            grid,
            out,
        } => commands::simo(&topology, model, eps, &grid, out),
        Command::Simulate {
            topology,
            n_molecules,
            grid,
            curve_dt,
            seed,
            threads,
            no_leap,
            records,
            heatmap,
            heatmap_out,
            out,
        } => commands::simulate(commands::SimulateArgs {
            topology: &topology,
            n_molecules,
            dt: grid.dt.unwrap_or(DEFAULT_SIM_DT),
            horizon: grid.horizon,
            curve_dt,
            seed,
            threads,
            leap: !no_leap,
            records,
            heatmap,
            heatmap_out,
            out,
        }),
        Command::Compare { a, b, resample, out } => commands::compare(&a, &b, resample, out),
        Command::Sweep {
            topology,
            angles,
            model,
            eps,
            mc,
            curve_dt,
            horizon,
            no_eclipse_rows,
            threads,
            out,
        } => commands::sweep(commands::SweepArgs {
            topology: &topology,
            angles: &angles,
            model: model.kind(eps),
            mc: &mc,
            curve_dt,
            horizon,
            eclipse_rows: !no_eclipse_rows,
            threads,
            out,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let roc = anyhow::Error::from(mcvd_core::Error::RocViolation { product: 1.2 });
        assert_eq!(exit_code(&roc), 3);
        assert_eq!(exit_code(&anyhow::Error::from(InputError("x".into()))), 2);
        assert_eq!(
            exit_code(&anyhow::Error::from(OutputError("x".into())).context("while writing")),
            4
        );
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(exit_code(&anyhow::Error::from(io)), 4);
    }
}
