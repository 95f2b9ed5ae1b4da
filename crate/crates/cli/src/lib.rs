//! The `fgm` command line: mechanism check, flamelet tabulation, model
//! training, family comparison, MLP tuning and the library-count study.

pub mod commands;
pub mod config;
pub mod error;

use clap::{Parser, Subcommand};
use config::RunConfig;
use error::{input, CliError};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "fgm",
    version,
    about = "Flamelet tables and their machine-learned surrogates"
)]
pub struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// overrides the configured output directory
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// overrides the configured worker count
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a mechanism and check element balance
    MechCheck {
        /// mechanism file; the configured or bundled one when omitted
        path: Option<PathBuf>,
    },
    /// Solve one flamelet per dissipation rate and write the library and CSV
    Tabulate {
        /// comma-separated dissipation rates, 1/s
        #[arg(long, value_delimiter = ',')]
        chi: Option<Vec<f64>>,
    },
    /// Train one model and report its held-out scores
    Train {
        /// lr, mlp, rf or svr
        #[arg(long)]
        family: Option<String>,
        /// flattened CSV to train on instead of tabulating
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// MLP hidden layer widths, comma separated
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train all four families and emit the comparison table and curves
    Compare {
        /// dissipation rate of the prediction curves, 1/s
        #[arg(long)]
        chi: Option<f64>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Random or full search over MLP hyperparameters
    Tune {
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        min_layers: Option<usize>,
        #[arg(long)]
        max_layers: Option<usize>,
        /// every configuration of the space
        #[arg(long)]
        full: bool,
        /// acknowledge the cost of a full search
        #[arg(long)]
        confirm_full: bool,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Interpolation error of library subsets against direct solves
    SubsetStudy {
        /// comma-separated subset sizes
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        #[arg(long)]
        pool_size: Option<usize>,
    },
}

/// Parse `args`, resolve the configuration and run one command. Returns
/// the process exit code.
pub fn run<I, T>(
    args: I,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, env, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(
    cli: Cli,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply_env(env)?;
    if let Some(d) = cli.output_dir {
        cfg.output_dir = d;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| input(e.to_string()))?;
    // command output is buffered so the closure can move to a pool thread
    let mut buf = Vec::new();
    let result = pool.install(|| commands::dispatch(cli.command, cfg, &mut buf));
    out.write_all(&buf)?;
    result
}
