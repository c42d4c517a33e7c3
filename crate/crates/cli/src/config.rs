//! Run configuration: TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use isoclust_core::model::validate;
use isoclust_core::sim::StopCondition;
use isoclust_core::Params64;

use crate::CliError;

pub const TOOL_NAME: &str = "isoclust";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flags shared by every subcommand; `None` means "not given", so the value
/// falls back to the config file and then to the built-in default.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Contamination rate per contagious individual.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,

    /// Probability that a contamination is traceable.
    #[arg(long, global = true)]
    pub p: Option<f64>,

    /// Detection rate per contagious individual.
    #[arg(long, global = true)]
    pub delta: Option<f64>,

    /// Base seed; replicate seeds derive from (seed, index).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Number of independent replicates.
    #[arg(long, global = true)]
    pub replicates: Option<u64>,

    /// Stop bound: absolute simulation time.
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,

    /// Stop bound: cumulative infected individuals.
    #[arg(long = "max-individuals", global = true)]
    pub max_individuals: Option<u64>,

    /// Stop bound: number of events.
    #[arg(long = "max-events", global = true)]
    pub max_events: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Table output format: csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,

    /// Series truncation; defaults to the geometric tail rule.
    #[arg(long = "trunc-k", global = true)]
    pub trunc_k: Option<usize>,

    /// Root-solver tolerance on |L(alpha) - 1|.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Worker threads for replicates; 0 uses all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub t_max: Option<f64>,
    pub max_individuals: Option<u64>,
    pub max_events: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub trunc_k: Option<usize>,
    pub tol: Option<f64>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Params64,
    pub seed: u64,
    pub replicates: u64,
    pub stop: StopCondition,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub trunc_k: Option<usize>,
    pub tol: f64,
    pub workers: usize,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let gamma = args.gamma.or(file.gamma).unwrap_or(2.0);
        let p = args.p.or(file.p).unwrap_or(0.5);
        let delta = args.delta.or(file.delta).unwrap_or(0.5);
        let params = validate(gamma, p, delta).map_err(CliError::usage_from)?;

        let replicates = args.replicates.or(file.replicates).unwrap_or(1);
        if replicates < 1 {
            return Err(CliError::usage("replicates must be >= 1"));
        }
        let tol = args.tol.or(file.tol).unwrap_or(1e-12);
        if !tol.is_finite() || tol <= 0.0 {
            return Err(CliError::usage("tol must be positive"));
        }
        let format = match args
            .format
            .clone()
            .or(file.format)
            .unwrap_or_else(|| "csv".into())
            .as_str()
        {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return Err(CliError::usage(format!("unknown format '{other}'"))),
        };
        let stop = StopCondition {
            t_max: args.t_max.or(file.t_max),
            max_individuals: args.max_individuals.or(file.max_individuals),
            max_events: args.max_events.or(file.max_events),
        };

        Ok(RunConfig {
            params,
            seed: args.seed.or(file.seed).unwrap_or(42),
            replicates,
            stop,
            out: args.out.clone().or(file.out).unwrap_or_else(|| "out".into()),
            format,
            trunc_k: args.trunc_k.or(file.trunc_k),
            tol,
            workers: args.workers.or(file.workers).unwrap_or(0),
        })
    }

    /// Stop condition with a fallback population cap for commands that must
    /// bound supercritical growth even when the user set no limit.
    pub fn stop_or_cap(&self, default_cap: u64) -> StopCondition {
        let mut stop = self.stop;
        if stop.t_max.is_none() && stop.max_individuals.is_none() && stop.max_events.is_none() {
            stop.max_individuals = Some(default_cap);
        }
        stop
    }
}
