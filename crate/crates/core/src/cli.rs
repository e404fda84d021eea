//! `mpsim` command line: single runs, sweeps, and report re-rendering.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::engine::{self, EngineError, SimConfig};
use crate::experiment::{
    self, emit_epsilon_csv, emit_summary, parse_summary_csv, ExperimentError, ReportFormat,
    SummaryRow, SweepSpec, DEFAULT_AGENT_COUNTS,
};
use crate::metrics::{self, MetricsError};
use crate::strategy::{StrategyError, StrategyKind, DEFAULT_BLEST_FACTOR, DEFAULT_EPSILON, STRATEGY_NAMES};
use crate::topology::{default_topology, parse_topology, Topology, TopologyError};

pub const THREADS_ENV: &str = "MPSIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mpsim", version, about = "Multipath path-selection simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and write its scores.
    Run(RunArgs),
    /// Run a strategy x agent-count grid, or an epsilon sensitivity grid.
    Sweep(SweepArgs),
    /// Re-render stored results without simulating.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Topology JSON file; the built-in three-path topology if omitted.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_BLEST_FACTOR)]
    pub blest_factor: f64,
    /// Output file; stdout if omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// csv or markdown.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Full-precision numbers instead of two decimals.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub strategy: String,
    #[arg(long, default_value_t = 10)]
    pub agents: usize,
    /// Also write the per-step, per-path time series CSV here.
    #[arg(long)]
    pub timeseries: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep all seven strategies.
    #[arg(long)]
    pub all_strategies: bool,
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<String>,
    /// Comma-separated agent counts for the strategy grid.
    #[arg(long, value_delimiter = ',')]
    pub agents_list: Vec<usize>,
    /// Comma-separated epsilon values; switches to sensitivity mode.
    #[arg(long, value_delimiter = ',')]
    pub epsilon_grid: Vec<f64>,
    /// Agent count for sensitivity mode.
    #[arg(long, default_value_t = 500)]
    pub agents: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary CSV written by `run` or `sweep`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(EngineError::InvalidConfig(_) | EngineError::Strategy(_))
            | CliError::Strategy(_)
            | CliError::Topology(_)
            | CliError::Usage(_)
            | CliError::Read { .. } => 2,
            CliError::Experiment(
                ExperimentError::EmptyGrid(_)
                | ExperimentError::UnknownFormat(_)
                | ExperimentError::InvalidEpsilon(_)
                | ExperimentError::Malformed(_)
                | ExperimentError::NoRows
                | ExperimentError::Engine(_),
            ) => 2,
            _ => 1,
        }
    }
}

/// Parses `args` and executes the command. Returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run(args) => cmd_run(&args, stdout),
        Command::Sweep(args) => cmd_sweep(&args, stdout),
        Command::Report(args) => cmd_report(&args, stdout),
    }
}

fn load_topology(path: Option<&Path>) -> Result<Topology, CliError> {
    match path {
        None => Ok(default_topology()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Read {
                path: p.to_owned(),
                source,
            })?;
            Ok(parse_topology(&text)?)
        }
    }
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_owned(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
    }
}

fn strategy(name: &str, common: &CommonArgs) -> Result<StrategyKind, CliError> {
    Ok(StrategyKind::from_name(name, common.epsilon, common.blest_factor)?)
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let common = &args.common;
    let kind = strategy(&args.strategy, common)?;
    let format: ReportFormat = common.format.parse()?;
    let topology = Arc::new(load_topology(common.topology.as_deref())?);
    let config = SimConfig::new(topology, kind, args.agents)
        .with_seed(common.seed)
        .with_steps(common.steps);

    let telemetry = engine::run(config)?;
    let scores = metrics::score(&telemetry)?;
    let row = SummaryRow::from_scores(kind.name(), args.agents, &scores);

    if let Some(path) = &args.timeseries {
        emit(Some(path), &telemetry.timeseries_csv(), stdout)?;
    }
    emit(
        common.output.as_deref(),
        &emit_summary(&[row], format, common.raw)?,
        stdout,
    )
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let common = &args.common;
    let format: ReportFormat = common.format.parse()?;
    let spec = SweepSpec {
        topology: Arc::new(load_topology(common.topology.as_deref())?),
        steps: common.steps,
        seed: common.seed,
        threads: threads_from_env()?,
        ..SweepSpec::default()
    };

    if !args.epsilon_grid.is_empty() {
        let points = experiment::sweep_epsilon(&args.epsilon_grid, args.agents, &spec)?;
        return emit(
            common.output.as_deref(),
            &emit_epsilon_csv(&points, common.raw)?,
            stdout,
        );
    }

    let names: Vec<&str> = if args.all_strategies {
        STRATEGY_NAMES.to_vec()
    } else {
        args.strategies
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .collect()
    };
    let strategies = names
        .iter()
        .map(|n| strategy(n, common))
        .collect::<Result<Vec<_>, _>>()?;
    let agent_counts = if args.agents_list.is_empty() {
        DEFAULT_AGENT_COUNTS.to_vec()
    } else {
        args.agents_list.clone()
    };
    let rows = experiment::sweep_agents(&SweepSpec {
        strategies,
        agent_counts,
        ..spec
    })?;
    emit(
        common.output.as_deref(),
        &emit_summary(&rows, format, common.raw)?,
        stdout,
    )
}

pub fn cmd_report(args: &ReportArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format: ReportFormat = args.format.parse()?;
    let text = fs::read_to_string(&args.input).map_err(|source| CliError::Read {
        path: args.input.clone(),
        source,
    })?;
    let rows = parse_summary_csv(&text)?;
    emit(
        args.output.as_deref(),
        &emit_summary(&rows, format, args.raw)?,
        stdout,
    )
}
