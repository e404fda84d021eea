//! Experiment grids and report rendering.
//!
//! A sweep runs one simulation per (strategy, agent count) cell. Cells are
//! independent: each derives its seed from `(seed, strategy, agents)`, so
//! they can execute in any order or in parallel and still produce the same
//! rows.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, default_forbidden_tags, AimdParams, EngineError, EngineParams, SimConfig};
use crate::metrics::{self, AxiomScores, MetricsError};
use crate::strategy::{mix64, StrategyKind};
use crate::topology::{default_topology, Topology};

pub const DEFAULT_AGENT_COUNTS: [usize; 7] = [10, 25, 50, 100, 150, 250, 500];
pub const SUMMARY_HEADER: &str =
    "strategy,agents,oscillation,loss,fairness,efficiency,stability,loss_avoidance";
pub const EPSILON_HEADER: &str = "epsilon,efficiency,loss";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
    #[error("no rows to emit")]
    NoRows,
    #[error("unknown report format `{0}` (expected csv or markdown)")]
    UnknownFormat(String),
    #[error("epsilon must lie in [0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("malformed results: {0}")]
    Malformed(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub topology: Arc<Topology>,
    pub strategies: Vec<StrategyKind>,
    pub agent_counts: Vec<usize>,
    pub steps: usize,
    pub seed: u64,
    pub epsilon_values: Option<Vec<f64>>,
    pub aimd: AimdParams,
    pub engine: EngineParams,
    pub forbidden_tags: BTreeSet<String>,
    /// Worker cap for grid cells; `None` or `Some(0)` lets rayon decide.
    pub threads: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            topology: Arc::new(default_topology()),
            strategies: StrategyKind::all(),
            agent_counts: DEFAULT_AGENT_COUNTS.to_vec(),
            steps: EngineParams::default().steps,
            seed: 0,
            epsilon_values: None,
            aimd: AimdParams::default(),
            engine: EngineParams::default(),
            forbidden_tags: default_forbidden_tags(),
            threads: None,
        }
    }
}

impl SweepSpec {
    /// The simulation config of one grid cell.
    pub fn cell_config(&self, strategy: StrategyKind, agents: usize) -> SimConfig {
        SimConfig {
            topology: Arc::clone(&self.topology),
            strategy,
            num_agents: agents,
            aimd: self.aimd,
            engine: EngineParams {
                steps: self.steps,
                ..self.engine
            },
            seed: cell_seed(self.seed, strategy, agents),
            forbidden_tags: self.forbidden_tags.clone(),
        }
    }
}

/// Seed for the (strategy, agents) cell of a sweep rooted at `seed`.
pub fn cell_seed(seed: u64, strategy: StrategyKind, agents: usize) -> u64 {
    mix64(seed ^ mix64((strategy.ordinal() as u64) << 32 ^ agents as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub agents: usize,
    pub oscillation: f64,
    pub loss: f64,
    pub fairness: f64,
    pub efficiency: f64,
    pub stability: f64,
    pub loss_avoidance: f64,
}

impl SummaryRow {
    pub fn from_scores(strategy: &str, agents: usize, s: &AxiomScores) -> Self {
        SummaryRow {
            strategy: strategy.to_owned(),
            agents,
            oscillation: s.oscillation,
            loss: s.loss_lambda,
            fairness: s.fairness_phi,
            efficiency: s.efficiency_eta,
            stability: s.stability_sigma,
            loss_avoidance: s.loss_avoidance,
        }
    }

    fn numbers(&self) -> [f64; 6] {
        [
            self.oscillation,
            self.loss,
            self.fairness,
            self.efficiency,
            self.stability,
            self.loss_avoidance,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPoint {
    pub epsilon: f64,
    pub efficiency: f64,
    pub loss: f64,
}

fn with_pool<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
            Ok(pool.install(job))
        }
        _ => Ok(job()),
    }
}

/// Runs and scores one configuration.
pub fn run_scored(config: SimConfig) -> Result<AxiomScores, ExperimentError> {
    let telemetry = engine::run(config)?;
    Ok(metrics::score(&telemetry)?)
}

/// One row per (strategy, agents), strategy-major with agents ascending.
pub fn sweep_agents(spec: &SweepSpec) -> Result<Vec<SummaryRow>, ExperimentError> {
    if spec.strategies.is_empty() {
        return Err(ExperimentError::EmptyGrid("no strategies"));
    }
    if spec.agent_counts.is_empty() {
        return Err(ExperimentError::EmptyGrid("no agent counts"));
    }
    let mut counts = spec.agent_counts.clone();
    counts.sort_unstable();

    let cells: Vec<(StrategyKind, usize)> = spec
        .strategies
        .iter()
        .flat_map(|&s| counts.iter().map(move |&n| (s, n)))
        .collect();

    with_pool(spec.threads, || {
        cells
            .par_iter()
            .map(|&(strategy, agents)| {
                let scores = run_scored(spec.cell_config(strategy, agents))?;
                Ok(SummaryRow::from_scores(strategy.name(), agents, &scores))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?
}

/// Epsilon-greedy efficiency and loss at `agents` for each exploration
/// factor. All points share the cell seed, so they see the same random
/// streams.
pub fn sweep_epsilon(
    epsilons: &[f64],
    agents: usize,
    spec: &SweepSpec,
) -> Result<Vec<EpsilonPoint>, ExperimentError> {
    if epsilons.is_empty() {
        return Err(ExperimentError::EmptyGrid("no epsilon values"));
    }
    if let Some(bad) = epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(ExperimentError::InvalidEpsilon(*bad));
    }
    with_pool(spec.threads, || {
        epsilons
            .par_iter()
            .map(|&epsilon| {
                let strategy = StrategyKind::EpsilonGreedy { epsilon };
                let scores = run_scored(spec.cell_config(strategy, agents))?;
                Ok(EpsilonPoint {
                    epsilon,
                    efficiency: scores.efficiency_eta,
                    loss: scores.loss_lambda,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(ExperimentError::UnknownFormat(other.to_owned())),
        }
    }
}

fn render(value: f64, raw: bool) -> String {
    if raw {
        format!("{value}")
    } else {
        format!("{value:.2}")
    }
}

/// Renders rows as CSV or a markdown table. Numbers get two decimals unless
/// `raw` is set, in which case they round-trip exactly.
pub fn emit_summary(
    rows: &[SummaryRow],
    format: ReportFormat,
    raw: bool,
) -> Result<String, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::NoRows);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(SUMMARY_HEADER);
            out.push('\n');
            for row in rows {
                let _ = write!(out, "{},{}", row.strategy, row.agents);
                for v in row.numbers() {
                    let _ = write!(out, ",{}", render(v, raw));
                }
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Strategy | Agents | Oscillation | Loss | Fairness | Efficiency | Stability | Loss Avoidance |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
            for row in rows {
                let _ = write!(out, "| {} | {} |", row.strategy, row.agents);
                for v in row.numbers() {
                    let _ = write!(out, " {} |", render(v, raw));
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Reads summary CSV produced by [`emit_summary`] (rounded or raw).
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| ExperimentError::Malformed(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != SUMMARY_HEADER {
        return Err(ExperimentError::Malformed(format!(
            "unexpected header `{header}`"
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()
        .map_err(|e| ExperimentError::Malformed(e.to_string()))?;
    if rows.is_empty() {
        return Err(ExperimentError::NoRows);
    }
    Ok(rows)
}

pub fn emit_epsilon_csv(points: &[EpsilonPoint], raw: bool) -> Result<String, ExperimentError> {
    if points.is_empty() {
        return Err(ExperimentError::NoRows);
    }
    let mut out = String::from(EPSILON_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{}",
            p.epsilon,
            render(p.efficiency, raw),
            render(p.loss, raw)
        );
    }
    Ok(out)
}
