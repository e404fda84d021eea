//! Network topologies: a set of parallel, independent paths between one
//! source and one destination.
//!
//! Topologies are loaded from a small JSON document:
//!
//! ```json
//! { "name": "default",
//!   "paths": [ { "id": 1, "capacity_mbps": 50, "base_rtt_ms": 20, "attributes": [] } ] }
//! ```
//!
//! Path order in the file is significant. It fixes tie-breaking in the
//! selectors and the Round-Robin cycle, so ids must read `1..=P` in order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tag marking a path that policy-driven strategies should avoid.
pub const HIGH_COST: &str = "high-cost";

/// 1-based path identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathId(pub u32);

impl PathId {
    /// Zero-based position of this path inside its topology.
    pub fn index(self) -> usize {
        (self.0 as usize).saturating_sub(1)
    }

    pub fn from_index(index: usize) -> Self {
        PathId(index as u32 + 1)
    }
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub id: PathId,
    #[serde(rename = "capacity_mbps")]
    pub capacity: f64,
    #[serde(rename = "base_rtt_ms")]
    pub base_rtt: f64,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
}

impl PathSpec {
    pub fn new(id: u32, capacity: f64, base_rtt: f64) -> Self {
        PathSpec {
            id: PathId(id),
            capacity,
            base_rtt,
            attributes: BTreeSet::new(),
        }
    }

    pub fn with_attribute(mut self, tag: impl Into<String>) -> Self {
        self.attributes.insert(tag.into());
        self
    }

    pub fn has_any(&self, tags: &BTreeSet<String>) -> bool {
        !self.attributes.is_disjoint(tags)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub name: String,
    pub paths: Vec<PathSpec>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid topology field `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl TopologyError {
    fn validation(field: &str, message: impl Into<String>) -> Self {
        TopologyError::Validation {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}

impl Topology {
    /// Builds and validates a topology.
    pub fn new(name: impl Into<String>, paths: Vec<PathSpec>) -> Result<Self, TopologyError> {
        let topology = Topology {
            name: name.into(),
            paths,
        };
        topology.validate()?;
        Ok(topology)
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, id: PathId) -> Option<&PathSpec> {
        self.paths.get(id.index()).filter(|p| p.id == id)
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.capacity).collect()
    }

    pub fn total_capacity(&self) -> f64 {
        self.paths.iter().map(|p| p.capacity).sum()
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.paths.is_empty() {
            return Err(TopologyError::validation(
                "paths",
                "topology needs at least one path",
            ));
        }
        let mut seen = BTreeSet::new();
        for path in &self.paths {
            if !seen.insert(path.id) {
                return Err(TopologyError::validation(
                    "id",
                    format!("duplicate path id {}", path.id),
                ));
            }
        }
        for (index, path) in self.paths.iter().enumerate() {
            if path.id != PathId::from_index(index) {
                return Err(TopologyError::validation(
                    "id",
                    format!(
                        "path ids must be 1..{} in file order, found {} at position {}",
                        self.paths.len(),
                        path.id,
                        index + 1
                    ),
                ));
            }
            // Written as negations so NaN is rejected too.
            if !(path.capacity > 0.0) || !path.capacity.is_finite() {
                return Err(TopologyError::validation(
                    "capacity_mbps",
                    "capacity must be positive",
                ));
            }
            if !(path.base_rtt > 0.0) || !path.base_rtt.is_finite() {
                return Err(TopologyError::validation(
                    "base_rtt_ms",
                    "base RTT must be positive",
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }
}

/// Parses a topology configuration, rejecting unknown fields.
pub fn parse_topology(config_text: &str) -> Result<Topology, TopologyError> {
    let topology: Topology = serde_json::from_str(config_text).map_err(from_json_error)?;
    topology.validate()?;
    Ok(topology)
}

fn from_json_error(err: serde_json::Error) -> TopologyError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => {
            let message = err.to_string();
            let field = backticked(&message).unwrap_or("<schema>").to_owned();
            TopologyError::Validation { field, message }
        }
        Category::Syntax | Category::Eof | Category::Io => TopologyError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        },
    }
}

// serde reports "missing field `x`" / "unknown field `x`, expected ..."
fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

/// The built-in three-path topology: a low-latency path, a high-capacity
/// path, and a balanced path tagged `high-cost`.
pub fn default_topology() -> Topology {
    Topology {
        name: "default".to_owned(),
        paths: vec![
            PathSpec::new(1, 50.0, 20.0),
            PathSpec::new(2, 100.0, 50.0),
            PathSpec::new(3, 80.0, 80.0).with_attribute(HIGH_COST),
        ],
    }
}
