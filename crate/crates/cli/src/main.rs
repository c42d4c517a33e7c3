//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime or numerical failure,
//! 3 statistical-verdict failure (for CI gating).

mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter values.
    Usage(String),
    /// Numerical failure, I/O failure, or a core error at runtime.
    Runtime(String),
    /// A statistical comparison did not meet its threshold.
    Verdict(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn usage_from(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    fn runtime_from(e: impl fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    fn verdict(msg: impl Into<String>) -> Self {
        CliError::Verdict(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verdict(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
            CliError::Verdict(m) => write!(f, "verdict: {m}"),
        }
    }
}

impl From<isoclust_core::Error> for CliError {
    fn from(e: isoclust_core::Error) -> Self {
        match e {
            // bad user input, not a computation failure
            isoclust_core::Error::InvalidParameters(_) | isoclust_core::Error::InvalidStop(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "isoclust",
    version,
    about = "Simulation and analysis of an epidemic with contact tracing and whole-cluster isolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form analysis: growth exponent, limiting size profiles,
    /// extinction probability.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Fail (exit 2) instead of writing nulls when no growth exponent
        /// exists for the given parameters.
        #[arg(long)]
        require_alpha: bool,
    },
    /// Run replicates and write full event logs, genealogies and snapshot
    /// grids.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of rows in each snapshot grid.
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
    },
    /// Pool replicates and compare empirical size distributions with the
    /// limiting profiles; exit 3 when a threshold fails.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Acceptance threshold on TV(empirical isolated, pi_i).
        #[arg(long, default_value_t = 0.02)]
        tv_threshold: f64,
        /// Relative band for the growth-rate estimate.
        #[arg(long, default_value_t = 0.05)]
        alpha_band: f64,
    },
    /// Integrate the expected-count hierarchy and report its growth rate.
    Ode {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest tracked cluster size.
        #[arg(long, default_value_t = 160)]
        k_max: usize,
        /// Integration horizon.
        #[arg(long, default_value_t = 18.0)]
        horizon: f64,
        /// Fixed step; defaults to the stability-bounded step.
        #[arg(long)]
        dt: Option<f64>,
        /// Tolerance on |slope - alpha| for the verdict.
        #[arg(long, default_value_t = 1e-4)]
        slope_tol: f64,
    },
    /// Poisson-cohort demonstration of the detection bias.
    Paradox {
        #[command(flatten)]
        common: CommonArgs,
        /// Lifespan law: "exp:RATE", "point:VALUE" or "table:FILE" (CSV of
        /// u,ell quantile pairs).
        #[arg(long, default_value = "exp:1.0")]
        lifespan: String,
        /// Birth intensity: "exp" or "poly:R".
        #[arg(long, default_value = "exp")]
        intensity: String,
        /// Cohort horizon.
        #[arg(long, default_value_t = 12.0)]
        horizon: f64,
        /// Number of observation times in the output table.
        #[arg(long, default_value_t = 13)]
        obs_points: usize,
    },
    /// Detection-free mode: cluster-size profile against the Yule-Simon
    /// law.
    Yule {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of clusters to grow.
        #[arg(long, default_value_t = 100_000)]
        clusters: u64,
        /// Acceptance threshold on TV(empirical, sigma_p).
        #[arg(long, default_value_t = 0.02)]
        tv_threshold: f64,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze {
            common,
            require_alpha,
        } => {
            let config = RunConfig::resolve(&common)?;
            with_pool(&config, || commands::analyze::run(&config, require_alpha))
        }
        Command::Simulate {
            common,
            grid_points,
        } => {
            let config = RunConfig::resolve(&common)?;
            with_pool(&config, || commands::simulate::run(&config, grid_points))
        }
        Command::Compare {
            common,
            tv_threshold,
            alpha_band,
        } => {
            let config = RunConfig::resolve(&common)?;
            with_pool(&config, || {
                commands::compare::run(&config, tv_threshold, alpha_band)
            })
        }
        Command::Ode {
            common,
            k_max,
            horizon,
            dt,
            slope_tol,
        } => {
            let config = RunConfig::resolve(&common)?;
            commands::ode::run(&config, k_max, horizon, dt, slope_tol)
        }
        Command::Paradox {
            common,
            lifespan,
            intensity,
            horizon,
            obs_points,
        } => {
            let config = RunConfig::resolve(&common)?;
            commands::paradox::run(&config, &lifespan, &intensity, horizon, obs_points)
        }
        Command::Yule {
            common,
            clusters,
            tv_threshold,
        } => {
            let config = RunConfig::resolve(&common)?;
            commands::yule::run(&config, clusters, tv_threshold)
        }
    }
}

/// Runs `f` inside a bounded worker pool when one was requested.
fn with_pool(
    config: &RunConfig,
    f: impl FnOnce() -> Result<(), CliError> + Send,
) -> Result<(), CliError> {
    if config.workers == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(CliError::runtime_from)?;
    pool.install(f)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_help =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
