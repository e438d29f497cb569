mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Induced Markov maps, attractor classification and expansion certificates
/// for piecewise smooth interval maps.
#[derive(Debug, Parser)]
#[command(name = "intervaldyn", version)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Map definition (JSON).
    #[arg(long)]
    pub map: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the map and list exceptional points, lateral values and periodic points.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, default_value_t = 6)]
        period_max: usize,
    },
    /// Sample basins and classify attractors.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 20_000)]
        length: usize,
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        #[arg(long, default_value_t = 8)]
        period_max: usize,
        /// Orbit length for the critical-value order.
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
    },
    /// First-return map to an interval with distortion and expansion estimates.
    ReturnMap {
        #[command(flatten)]
        common: Common,
        /// Base interval `a,b`.
        #[arg(long, value_parser = commands::parse_interval)]
        j: Option<intervaldyn::Interval>,
        /// Search for a nice interval around this point instead of `--j`.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 50)]
        t_max: usize,
        /// Requested depth of the refined partition; lowered to keep it below 1e6 cells.
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Uniform expansion certificate away from a neighbourhood of the exceptional set.
    Mane {
        #[command(flatten)]
        common: Common,
        /// `a,b[,a2,b2...]`: the open intervals making up U.
        #[arg(long, value_parser = commands::parse_intervals)]
        avoid: commands::IntervalList,
        #[arg(long, default_value_t = 8)]
        period_max: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        nmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cobweb diagram and orbit table.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
