//! Deterministic discrete-time simulator for decentralized multipath path
//! selection.
//!
//! `N` AIMD-controlled agents pick one of several parallel paths every step
//! using one of seven policies. The resulting load, overflow and RTT time
//! series are scored for efficiency, loss, stability and fairness.
//!
//! ```
//! use std::sync::Arc;
//! use mpsim::{engine, metrics, strategy::StrategyKind, topology::default_topology, SimConfig};
//!
//! let config = SimConfig::new(Arc::new(default_topology()), StrategyKind::RoundRobin, 30)
//!     .with_steps(50);
//! let telemetry = engine::run(config).unwrap();
//! let scores = metrics::score(&telemetry).unwrap();
//! assert_eq!(scores.fairness_phi, 1.0);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod strategy;
pub mod topology;

pub use engine::{run, SimConfig, Telemetry};
pub use metrics::AxiomScores;
pub use strategy::StrategyKind;
pub use topology::{default_topology, parse_topology, PathId, Topology};
