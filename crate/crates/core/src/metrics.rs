//! Axiomatic scores computed from a run's telemetry.
//!
//! All time averages are per-step means. Efficiency is the mean aggregate
//! *sent* load; goodput (sent minus dropped) is reported separately.

use thiserror::Error;

use crate::engine::{StepRecord, Telemetry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("telemetry has no records")]
    EmptyTelemetry,
    #[error("undefined fairness: no windows or all windows are zero")]
    UndefinedFairness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomScores {
    /// Mbps.
    pub oscillation: f64,
    /// Mbps.
    pub loss_lambda: f64,
    pub fairness_phi: f64,
    /// Mbps.
    pub efficiency_eta: f64,
    /// Mbps.
    pub goodput: f64,
    pub stability_sigma: f64,
    pub loss_avoidance: f64,
}

fn mean_over_steps(records: &[StepRecord], per_step: impl Fn(&StepRecord) -> f64) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(per_step).sum::<f64>() / records.len() as f64
}

pub fn efficiency(records: &[StepRecord]) -> f64 {
    mean_over_steps(records, StepRecord::total_load)
}

pub fn loss(records: &[StepRecord]) -> f64 {
    mean_over_steps(records, StepRecord::total_overflow)
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Mean over steps of the spread of load across paths within the step.
pub fn oscillation(records: &[StepRecord]) -> f64 {
    mean_over_steps(records, |r| population_std(&r.load))
}

pub fn stability(oscillation: f64) -> f64 {
    1.0 / (1.0 + oscillation)
}

pub fn loss_avoidance(loss_lambda: f64) -> f64 {
    1.0 / (1.0 + loss_lambda)
}

/// Jain's index `(Σx)² / (N·Σx²)`.
pub fn jain_fairness(values: &[f64]) -> Result<f64, MetricsError> {
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|x| x * x).sum();
    if values.is_empty() || sum_sq == 0.0 {
        return Err(MetricsError::UndefinedFairness);
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

pub fn score(telemetry: &Telemetry) -> Result<AxiomScores, MetricsError> {
    if telemetry.records.is_empty() {
        return Err(MetricsError::EmptyTelemetry);
    }
    let oscillation = oscillation(&telemetry.records);
    let loss_lambda = loss(&telemetry.records);
    let efficiency_eta = efficiency(&telemetry.records);
    Ok(AxiomScores {
        oscillation,
        loss_lambda,
        fairness_phi: jain_fairness(&telemetry.final_cwnds)?,
        efficiency_eta,
        goodput: efficiency_eta - loss_lambda,
        stability_sigma: stability(oscillation),
        loss_avoidance: loss_avoidance(loss_lambda),
    })
}
