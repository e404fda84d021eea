//! Discrete-time simulation of AIMD agents sharing a set of parallel paths.
//!
//! Every step each agent picks a path from what it saw in the previous
//! step, sends `cwnd` worth of load on it, and the paths that end up over
//! capacity drop the excess in proportion to each agent's contribution.
//! Agents that lost anything halve their window; agents that get through a
//! whole clean RTT grow it by one.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::strategy::{PathSelector, PathView, StrategyError, StrategyKind, StrategyState};
use crate::topology::{PathId, Topology, HIGH_COST};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimdParams {
    /// Packets.
    pub initial_cwnd: f64,
    /// Packets added per loss-free RTT.
    pub alpha: f64,
    /// Multiplicative decrease on loss.
    pub beta: f64,
    pub cwnd_floor: f64,
    pub mbps_per_cwnd: f64,
}

impl Default for AimdParams {
    fn default() -> Self {
        AimdParams {
            initial_cwnd: 1.0,
            alpha: 1.0,
            beta: 0.5,
            cwnd_floor: 1.0,
            mbps_per_cwnd: 1.0,
        }
    }
}

impl AimdParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::InvalidConfig(msg.to_owned()));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(self.cwnd_floor > 0.0) {
            return bad("cwnd_floor must be positive");
        }
        if !(self.initial_cwnd >= self.cwnd_floor) {
            return bad("initial_cwnd must be at least cwnd_floor");
        }
        if !(self.mbps_per_cwnd > 0.0) {
            return bad("mbps_per_cwnd must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineParams {
    pub steps: usize,
    pub step_ms: f64,
    /// Queuing-delay scale of the RTT model, in ms.
    pub queue_scale_k: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            steps: 300,
            step_ms: 10.0,
            queue_scale_k: 10.0,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.steps == 0 {
            return Err(EngineError::InvalidConfig("steps must be at least 1".into()));
        }
        if !(self.step_ms > 0.0) {
            return Err(EngineError::InvalidConfig("step_ms must be positive".into()));
        }
        if !(self.queue_scale_k >= 0.0) {
            return Err(EngineError::InvalidConfig(
                "queue_scale_k must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub agent_id: u32,
    pub cwnd: f64,
    /// Time accumulated since the last window reset, in ms.
    pub rtt_clock_ms: f64,
    /// No loss since the last reset.
    pub window_clean: bool,
    pub strategy_state: StrategyState,
    pub chosen_path: Option<PathId>,
    /// Loss apportioned to this agent in the last step, in Mbps.
    pub last_loss: f64,
}

impl AgentState {
    pub fn new(agent_id: u32, params: &AimdParams, strategy_state: StrategyState) -> Self {
        AgentState {
            agent_id,
            cwnd: params.initial_cwnd,
            rtt_clock_ms: 0.0,
            window_clean: true,
            strategy_state,
            chosen_path: None,
            last_loss: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: Arc<Topology>,
    pub strategy: StrategyKind,
    pub num_agents: usize,
    pub aimd: AimdParams,
    pub engine: EngineParams,
    pub seed: u64,
    /// Tags Attribute-Aware refuses to route over.
    pub forbidden_tags: BTreeSet<String>,
}

impl SimConfig {
    /// Default parameters for `strategy` with `num_agents` agents.
    pub fn new(topology: Arc<Topology>, strategy: StrategyKind, num_agents: usize) -> Self {
        SimConfig {
            topology,
            strategy,
            num_agents,
            aimd: AimdParams::default(),
            engine: EngineParams::default(),
            seed: 0,
            forbidden_tags: default_forbidden_tags(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.engine.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.num_agents == 0 {
            return Err(EngineError::InvalidConfig("num_agents must be at least 1".into()));
        }
        if self.num_agents > u32::MAX as usize {
            return Err(EngineError::InvalidConfig("too many agents".into()));
        }
        self.topology
            .validate()
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        self.strategy.validate()?;
        self.aimd.validate()?;
        self.engine.validate()
    }
}

pub fn default_forbidden_tags() -> BTreeSet<String> {
    BTreeSet::from([HIGH_COST.to_owned()])
}

/// Per-path state of one completed step. Vectors are indexed by path
/// position (`PathId::index`).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load: Vec<f64>,
    pub overflow: Vec<f64>,
    pub inst_rtt: Vec<f64>,
}

impl StepRecord {
    /// What agents see before anything has been sent.
    pub fn initial(topology: &Topology) -> Self {
        let p = topology.path_count();
        StepRecord {
            step: 0,
            load: vec![0.0; p],
            overflow: vec![0.0; p],
            inst_rtt: topology.paths.iter().map(|path| path.base_rtt).collect(),
        }
    }

    pub fn total_load(&self) -> f64 {
        sum(&self.load)
    }

    pub fn total_overflow(&self) -> f64 {
        sum(&self.overflow)
    }
}

#[derive(Debug, Clone)]
pub struct Telemetry {
    pub records: Vec<StepRecord>,
    pub final_cwnds: Vec<f64>,
    pub config: SimConfig,
}

pub const TIMESERIES_HEADER: &str = "step,path_id,load_mbps,overflow_mbps,inst_rtt_ms";

impl Telemetry {
    pub fn path_count(&self) -> usize {
        self.config.topology.path_count()
    }

    /// One CSV row per (step, path), full float precision.
    pub fn timeseries_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * self.path_count() * 32);
        out.push_str(TIMESERIES_HEADER);
        out.push('\n');
        for record in &self.records {
            for p in 0..record.load.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    record.step,
                    PathId::from_index(p),
                    record.load[p],
                    record.overflow[p],
                    record.inst_rtt[p]
                );
            }
        }
        out
    }
}

// Left fold from +0.0; `Iterator::sum` starts at -0.0 for floats.
fn sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

/// `base_rtt + max(0, k * (load / capacity - 1))`
pub fn rtt_instantaneous(base_rtt: f64, load: f64, capacity: f64, k: f64) -> f64 {
    base_rtt + (k * (load / capacity - 1.0)).max(0.0)
}

/// Splits a path's overflow across its senders in proportion to their load.
/// Returns the per-agent losses and the overflow itself.
pub fn apportion_loss(agent_loads: &[f64], capacity: f64) -> (Vec<f64>, f64) {
    let total = sum(agent_loads);
    let overflow = (total - capacity).max(0.0);
    if total <= 0.0 || overflow == 0.0 {
        return (vec![0.0; agent_loads.len()], overflow);
    }
    let losses = agent_loads
        .iter()
        .map(|load| overflow * load / total)
        .collect();
    (losses, overflow)
}

pub fn aimd_update(agent: &mut AgentState, lost: bool, path_rtt: f64, step_ms: f64, params: &AimdParams) {
    if lost {
        agent.cwnd = (params.beta * agent.cwnd).max(params.cwnd_floor);
        agent.window_clean = false;
        agent.rtt_clock_ms = 0.0;
        return;
    }
    agent.rtt_clock_ms += step_ms;
    if agent.rtt_clock_ms >= path_rtt {
        if agent.window_clean {
            agent.cwnd += params.alpha;
        }
        agent.rtt_clock_ms = 0.0;
        agent.window_clean = true;
    }
}

/// Builds the per-path view agents decide from.
pub fn path_views<'a>(topology: &'a Topology, prev: &StepRecord) -> Vec<PathView<'a>> {
    topology
        .paths
        .iter()
        .enumerate()
        .map(|(i, path)| PathView {
            id: path.id,
            capacity: path.capacity,
            base_rtt: path.base_rtt,
            inst_rtt: prev.inst_rtt[i],
            prev_load: prev.load[i],
            attributes: &path.attributes,
        })
        .collect()
}

/// Advances every agent by one step and returns the resulting record.
pub fn step(
    agents: &mut [AgentState],
    selector: &PathSelector,
    topology: &Topology,
    prev: &StepRecord,
    step_index: usize,
    aimd: &AimdParams,
    engine: &EngineParams,
) -> Result<StepRecord, EngineError> {
    let view = path_views(topology, prev);
    let path_count = topology.path_count();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); path_count];
    for (i, agent) in agents.iter_mut().enumerate() {
        let path = selector.select(&mut agent.strategy_state, &view)?;
        agent.chosen_path = Some(path);
        members[path.index()].push(i);
    }

    let mut load = vec![0.0; path_count];
    let mut overflow = vec![0.0; path_count];
    let mut inst_rtt = vec![0.0; path_count];
    for (p, path) in topology.paths.iter().enumerate() {
        let sent: Vec<f64> = members[p]
            .iter()
            .map(|&i| agents[i].cwnd * aimd.mbps_per_cwnd)
            .collect();
        let (losses, over) = apportion_loss(&sent, path.capacity);
        load[p] = sum(&sent);
        overflow[p] = over;
        inst_rtt[p] = rtt_instantaneous(path.base_rtt, load[p], path.capacity, engine.queue_scale_k);
        for (&i, loss) in members[p].iter().zip(losses) {
            agents[i].last_loss = loss;
        }
    }

    for agent in agents.iter_mut() {
        let p = agent.chosen_path.expect("selected above").index();
        let lost = agent.last_loss > 0.0;
        aimd_update(agent, lost, inst_rtt[p], engine.step_ms, aimd);
    }

    Ok(StepRecord {
        step: step_index,
        load,
        overflow,
        inst_rtt,
    })
}

/// A single run, advanced one step at a time.
#[derive(Debug)]
pub struct Simulation {
    config: SimConfig,
    selector: PathSelector,
    agents: Vec<AgentState>,
    last: StepRecord,
    records: Vec<StepRecord>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let selector = PathSelector::new(
            config.strategy,
            &config.topology,
            config.forbidden_tags.clone(),
        )?;
        let agents = (0..config.num_agents)
            .map(|i| {
                let state = StrategyState::new(config.seed, i as u64)
                    .with_cursor(selector.initial_cursor(i));
                AgentState::new(i as u32, &config.aimd, state)
            })
            .collect();
        let last = StepRecord::initial(&config.topology);
        Ok(Simulation {
            records: Vec::with_capacity(config.engine.steps),
            config,
            selector,
            agents,
            last,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.records.len() >= self.config.engine.steps
    }

    pub fn step(&mut self) -> Result<&StepRecord, EngineError> {
        let record = step(
            &mut self.agents,
            &self.selector,
            &self.config.topology,
            &self.last,
            self.records.len(),
            &self.config.aimd,
            &self.config.engine,
        )?;
        self.last = record.clone();
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn finish(mut self) -> Result<Telemetry, EngineError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(Telemetry {
            records: self.records,
            final_cwnds: self.agents.iter().map(|a| a.cwnd).collect(),
            config: self.config,
        })
    }
}

pub fn run(config: SimConfig) -> Result<Telemetry, EngineError> {
    Simulation::new(config)?.finish()
}
