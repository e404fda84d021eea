//! Path-selection policies.
//!
//! Every selector is a decision over an agent's [`PathView`] of the network
//! as of the last completed step. Deterministic selectors are plain
//! functions; Round-Robin, WRR and epsilon-greedy also consume the agent's
//! [`StrategyState`]. Ties are always broken towards the lowest path id.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::topology::{PathId, Topology};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_BLEST_FACTOR: f64 = 1.5;

/// Report/CLI names, in table order.
pub const STRATEGY_NAMES: [&str; 7] = [
    "min_rtt",
    "min_load",
    "attribute_aware",
    "round_robin",
    "weighted_round_robin",
    "epsilon_greedy",
    "blest",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("empty path view")]
    EmptyView,
    #[error("no admissible path")]
    NoAdmissiblePath,
    #[error("all WRR weights are zero after rounding")]
    ZeroWeights,
    #[error("epsilon must lie in [0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("BLEST filter factor must be >= 1, got {0}")]
    InvalidFilterFactor(f64),
    #[error("unknown strategy `{0}`; valid names: {names}", names = STRATEGY_NAMES.join(", "))]
    UnknownStrategy(String),
}

/// What one agent can see of a path when it decides.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub id: PathId,
    pub capacity: f64,
    pub base_rtt: f64,
    /// Instantaneous RTT realized in the previous step, in ms.
    pub inst_rtt: f64,
    /// Aggregate load in the previous step, in Mbps.
    pub prev_load: f64,
    pub attributes: &'a BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    MinRtt,
    MinLoad,
    AttributeAware,
    RoundRobin,
    WeightedRoundRobin,
    EpsilonGreedy { epsilon: f64 },
    Blest { filter_factor: f64 },
}

impl StrategyKind {
    /// All seven policies with their default parameters, in table order.
    pub fn all() -> Vec<StrategyKind> {
        vec![
            StrategyKind::MinRtt,
            StrategyKind::MinLoad,
            StrategyKind::AttributeAware,
            StrategyKind::RoundRobin,
            StrategyKind::WeightedRoundRobin,
            StrategyKind::EpsilonGreedy {
                epsilon: DEFAULT_EPSILON,
            },
            StrategyKind::Blest {
                filter_factor: DEFAULT_BLEST_FACTOR,
            },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::MinRtt => "min_rtt",
            StrategyKind::MinLoad => "min_load",
            StrategyKind::AttributeAware => "attribute_aware",
            StrategyKind::RoundRobin => "round_robin",
            StrategyKind::WeightedRoundRobin => "weighted_round_robin",
            StrategyKind::EpsilonGreedy { .. } => "epsilon_greedy",
            StrategyKind::Blest { .. } => "blest",
        }
    }

    /// Position in [`STRATEGY_NAMES`].
    pub fn ordinal(&self) -> usize {
        STRATEGY_NAMES
            .iter()
            .position(|n| *n == self.name())
            .expect("every kind is named")
    }

    /// Resolves a name, attaching the given parameters where they apply.
    pub fn from_name(name: &str, epsilon: f64, filter_factor: f64) -> Result<Self, StrategyError> {
        let kind = match name {
            "min_rtt" => StrategyKind::MinRtt,
            "min_load" => StrategyKind::MinLoad,
            "attribute_aware" => StrategyKind::AttributeAware,
            "round_robin" => StrategyKind::RoundRobin,
            "weighted_round_robin" => StrategyKind::WeightedRoundRobin,
            "epsilon_greedy" => StrategyKind::EpsilonGreedy { epsilon },
            "blest" => StrategyKind::Blest { filter_factor },
            other => return Err(StrategyError::UnknownStrategy(other.to_owned())),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        match *self {
            StrategyKind::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                Err(StrategyError::InvalidEpsilon(epsilon))
            }
            StrategyKind::Blest { filter_factor } if !(filter_factor >= 1.0) => {
                Err(StrategyError::InvalidFilterFactor(filter_factor))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::from_name(s, DEFAULT_EPSILON, DEFAULT_BLEST_FACTOR)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-agent mutable selection state. Never shared between agents or runs.
#[derive(Debug, Clone)]
pub struct StrategyState {
    pub rr_cursor: u64,
    pub rng: ChaCha8Rng,
}

impl StrategyState {
    pub fn new(global_seed: u64, agent_id: u64) -> Self {
        StrategyState {
            rr_cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(agent_stream_seed(global_seed, agent_id)),
        }
    }

    pub fn with_cursor(mut self, cursor: u64) -> Self {
        self.rr_cursor = cursor;
        self
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one agent's random stream, derived from `(global_seed, agent_id)`.
pub fn agent_stream_seed(global_seed: u64, agent_id: u64) -> u64 {
    mix64(global_seed ^ mix64(agent_id))
}

fn argmin_by(view: &[PathView<'_>], key: impl Fn(&PathView<'_>) -> f64) -> Option<PathId> {
    let mut best: Option<(PathId, f64)> = None;
    for path in view {
        let k = key(path);
        match best {
            Some((_, b)) if !(k < b) => {}
            _ => best = Some((path.id, k)),
        }
    }
    best.map(|(id, _)| id)
}

pub fn select_min_rtt(view: &[PathView<'_>]) -> Result<PathId, StrategyError> {
    argmin_by(view, |p| p.inst_rtt).ok_or(StrategyError::EmptyView)
}

pub fn select_min_load(view: &[PathView<'_>]) -> Result<PathId, StrategyError> {
    argmin_by(view, |p| p.prev_load).ok_or(StrategyError::EmptyView)
}

/// Drops paths carrying any forbidden tag, then picks the lowest RTT.
pub fn select_attribute_aware(
    view: &[PathView<'_>],
    forbidden_tags: &BTreeSet<String>,
) -> Result<PathId, StrategyError> {
    if view.is_empty() {
        return Err(StrategyError::EmptyView);
    }
    let admissible: Vec<PathView<'_>> = view
        .iter()
        .filter(|p| p.attributes.is_disjoint(forbidden_tags))
        .copied()
        .collect();
    select_min_rtt(&admissible).map_err(|_| StrategyError::NoAdmissiblePath)
}

pub fn select_round_robin(state: &mut StrategyState, path_count: usize) -> PathId {
    assert!(path_count > 0, "round robin over zero paths");
    let slot = (state.rr_cursor % path_count as u64) as usize;
    state.rr_cursor += 1;
    PathId::from_index(slot)
}

/// Builds one period of a smooth weighted round-robin schedule.
///
/// Capacities are rounded to integers and reduced by their GCD; path `i`
/// then owns `weight_i` slots of the period. Each slot goes to the path with
/// the highest running credit (lowest id on ties), which is then charged the
/// total weight.
pub fn wrr_schedule(capacities: &[f64]) -> Result<Vec<PathId>, StrategyError> {
    let rounded: Vec<u64> = capacities
        .iter()
        .map(|c| if c.is_finite() && *c > 0.0 { c.round() as u64 } else { 0 })
        .collect();
    let divisor = rounded.iter().fold(0, |g, &w| gcd(g, w));
    if divisor == 0 {
        return Err(StrategyError::ZeroWeights);
    }
    let weights: Vec<i64> = rounded.iter().map(|&w| (w / divisor) as i64).collect();
    let total: i64 = weights.iter().sum();

    let mut credit = vec![0i64; weights.len()];
    let mut schedule = Vec::with_capacity(total as usize);
    for _ in 0..total {
        let mut best = 0;
        for (i, w) in weights.iter().enumerate() {
            credit[i] += w;
            if credit[i] > credit[best] {
                best = i;
            }
        }
        credit[best] -= total;
        schedule.push(PathId::from_index(best));
    }
    Ok(schedule)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn select_wrr(state: &mut StrategyState, schedule: &[PathId]) -> PathId {
    assert!(!schedule.is_empty(), "empty WRR schedule");
    let slot = (state.rr_cursor % schedule.len() as u64) as usize;
    state.rr_cursor += 1;
    schedule[slot]
}

/// With probability `epsilon` explores a uniformly random path (any path,
/// including the current best); otherwise exploits the lowest RTT.
pub fn select_epsilon_greedy(
    state: &mut StrategyState,
    view: &[PathView<'_>],
    epsilon: f64,
) -> Result<PathId, StrategyError> {
    if view.is_empty() {
        return Err(StrategyError::EmptyView);
    }
    let u: f64 = state.rng.gen();
    if u < epsilon {
        let pick = state.rng.gen_range(0..view.len());
        Ok(view[pick].id)
    } else {
        select_min_rtt(view)
    }
}

/// Keeps paths whose RTT is within `filter_factor` of the best and returns
/// the earliest expected completion among them. Queuing delay is already
/// part of `inst_rtt`.
pub fn select_blest(view: &[PathView<'_>], filter_factor: f64) -> Result<PathId, StrategyError> {
    let best = view
        .iter()
        .map(|p| p.inst_rtt)
        .fold(f64::INFINITY, f64::min);
    let threshold = filter_factor * best;
    let candidates: Vec<PathView<'_>> = view
        .iter()
        .filter(|p| p.inst_rtt <= threshold)
        .copied()
        .collect();
    select_min_rtt(&candidates)
}

/// A strategy bound to a topology, ready to make per-agent decisions.
#[derive(Debug, Clone)]
pub struct PathSelector {
    kind: StrategyKind,
    path_count: usize,
    forbidden_tags: BTreeSet<String>,
    schedule: Vec<PathId>,
}

impl PathSelector {
    pub fn new(
        kind: StrategyKind,
        topology: &Topology,
        forbidden_tags: BTreeSet<String>,
    ) -> Result<Self, StrategyError> {
        kind.validate()?;
        let schedule = match kind {
            StrategyKind::WeightedRoundRobin => wrr_schedule(&topology.capacities())?,
            _ => Vec::new(),
        };
        if kind == StrategyKind::AttributeAware
            && topology.paths.iter().all(|p| p.has_any(&forbidden_tags))
        {
            return Err(StrategyError::NoAdmissiblePath);
        }
        Ok(PathSelector {
            kind,
            path_count: topology.path_count(),
            forbidden_tags,
            schedule,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn wrr_schedule(&self) -> &[PathId] {
        &self.schedule
    }

    /// Cursor an agent starts from. Round-Robin agents all start at slot 0
    /// and move in lockstep; WRR agents are staggered by id across the
    /// schedule period.
    pub fn initial_cursor(&self, agent_index: usize) -> u64 {
        match self.kind {
            StrategyKind::WeightedRoundRobin => (agent_index % self.schedule.len()) as u64,
            _ => 0,
        }
    }

    pub fn select(
        &self,
        state: &mut StrategyState,
        view: &[PathView<'_>],
    ) -> Result<PathId, StrategyError> {
        match self.kind {
            StrategyKind::MinRtt => select_min_rtt(view),
            StrategyKind::MinLoad => select_min_load(view),
            StrategyKind::AttributeAware => select_attribute_aware(view, &self.forbidden_tags),
            StrategyKind::RoundRobin => Ok(select_round_robin(state, self.path_count)),
            StrategyKind::WeightedRoundRobin => Ok(select_wrr(state, &self.schedule)),
            StrategyKind::EpsilonGreedy { epsilon } => {
                select_epsilon_greedy(state, view, epsilon)
            }
            StrategyKind::Blest { filter_factor } => select_blest(view, filter_factor),
        }
    }
}
