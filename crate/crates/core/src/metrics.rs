//! Measurement tools: the gradient-deviation probe, the cohort-coverage
//! bound check, and communication-cost accounting.

use crate::params::{ParamError, ParamVector};
use crate::rng;
use crate::sampling::{Sampler, SamplerError, SamplerKind};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("deviation window is empty")]
    EmptyWindow,
    #[error("reference direction has zero norm, deviation is undefined")]
    ZeroReference,
    #[error("need at least one client gradient")]
    NoGradients,
    #[error("need at least one trial")]
    ZeroTrials,
    #[error("window length must be at least 1 round")]
    ZeroWindow,
    #[error("no cost entry named {name} to use as baseline")]
    MissingBaseline { name: String },
    #[error("baseline consumed zero bytes, reductions are undefined")]
    ZeroBaseline,
    #[error("cost entry {name} covers zero rounds")]
    ZeroRounds { name: String },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// One probe reading: how far the average of the last `window` stored
/// pseudo-gradients sits from the full-participation direction, normalized
/// by the reference's squared norm (`value`) and unnormalized (`raw`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationSample {
    pub round: u64,
    pub tau: usize,
    pub window: usize,
    pub value: f64,
    pub raw: f64,
}

/// A deviation measurement before it is tagged with round/window metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationMeasure {
    /// ‖avg − reference‖² / ‖reference‖².
    pub value: f64,
    /// ‖avg − reference‖².
    pub raw: f64,
}

/// Compares the mean of a window of directions against a reference
/// direction. Errors on an empty window or a zero-norm reference.
pub fn gradient_deviation(
    window: &[ParamVector],
    reference: &ParamVector,
) -> Result<DeviationMeasure, MetricError> {
    if window.is_empty() {
        return Err(MetricError::EmptyWindow);
    }
    let denom = reference.norm_sq();
    if denom == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    let avg = ParamVector::mean(window)?;
    let raw = avg.sub(reference)?.norm_sq();
    Ok(DeviationMeasure {
        value: raw / denom,
        raw,
    })
}

/// Population heterogeneity G² = (1/K)·Σ‖g_i − ḡ‖², computed brute force.
pub fn heterogeneity(client_grads: &[ParamVector]) -> Result<f64, MetricError> {
    if client_grads.is_empty() {
        return Err(MetricError::NoGradients);
    }
    let mean = ParamVector::mean(client_grads)?;
    let mut total = 0.0;
    for g in client_grads {
        total += g.sub(&mean)?.norm_sq();
    }
    Ok(total / client_grads.len() as f64)
}

/// Monte-Carlo estimate of both sides of the coverage bound: the expected
/// squared deviation of the union-cohort mean gradient from the population
/// mean, against 8·E[((K−|S_τ|)/K)²]·(G² + ‖ḡ‖²).
#[derive(Debug, Clone, Copy)]
pub struct CoverageBoundOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub trials: usize,
    pub heterogeneity: f64,
}

impl CoverageBoundOutcome {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Estimates both sides of the coverage bound for a fixed set of client
/// gradients. Each trial draws a fresh cohort schedule, takes the union of
/// the first `tau` cohorts, and compares that union's mean gradient with
/// the all-clients mean. The same trials feed both expectations.
pub fn coverage_bound_check(
    client_grads: &[ParamVector],
    tau: usize,
    sampler_kind: SamplerKind,
    participation: f64,
    trials: usize,
    seed: u64,
) -> Result<CoverageBoundOutcome, MetricError> {
    if client_grads.is_empty() {
        return Err(MetricError::NoGradients);
    }
    if trials == 0 {
        return Err(MetricError::ZeroTrials);
    }
    if tau == 0 {
        return Err(MetricError::ZeroWindow);
    }
    let clients = client_grads.len();
    let mean_grad = ParamVector::mean(client_grads)?;
    let het = heterogeneity(client_grads)?;

    let mut lhs_sum = 0.0;
    let mut weight_sum = 0.0;
    for trial in 0..trials {
        let trial_seed = rng::stream(seed, "coverage-trial", &[trial as u64]).next_u64();
        let sampler = Sampler::new(sampler_kind, clients, participation, trial_seed)?;
        let mut union: BTreeSet<usize> = BTreeSet::new();
        for t in 1..=tau as u64 {
            union.extend(sampler.sample(t)?);
        }
        let covered: Vec<ParamVector> = union
            .iter()
            .map(|&i| client_grads[i].clone())
            .collect();
        let union_mean = ParamVector::mean(&covered)?;
        lhs_sum += union_mean.sub(&mean_grad)?.norm_sq();
        let missing = (clients - union.len()) as f64 / clients as f64;
        weight_sum += missing * missing;
    }
    let lhs = lhs_sum / trials as f64;
    let rhs = 8.0 * (weight_sum / trials as f64) * (het + mean_grad.norm_sq());
    Ok(CoverageBoundOutcome {
        lhs,
        rhs,
        trials,
        heterogeneity: het,
    })
}

/// Which recorded metric a target or summary refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    TrainLoss,
    TestLoss,
    TestAccuracy,
}

impl MetricKind {
    /// Losses improve downward, accuracy upward.
    pub fn reached(&self, value: f64, target: f64) -> bool {
        match self {
            MetricKind::TrainLoss | MetricKind::TestLoss => value <= target,
            MetricKind::TestAccuracy => value >= target,
        }
    }
}

/// Inputs to the cost report for one algorithm's run.
#[derive(Debug, Clone)]
pub struct CostEntry {
    pub algorithm: String,
    /// Per-round traffic as a multiple of FedAvg's model-down + model-up.
    pub overhead: f64,
    pub model_bytes: u64,
    pub cohort_size: usize,
    pub rounds_total: u64,
    /// First round at which the quality target was met, if ever.
    pub rounds_to_target: Option<u64>,
}

/// Derived cost figures for one algorithm.
#[derive(Debug, Clone)]
pub struct CostRow {
    pub algorithm: String,
    pub overhead: f64,
    pub model_bytes: u64,
    pub cohort_size: usize,
    pub rounds_total: u64,
    /// Rounds charged toward the target; the full run when never reached.
    pub rounds_to_target: u64,
    /// Total bytes moved: overhead · 2 · model_bytes · cohort · rounds.
    pub total_bytes: u64,
    /// Fraction of the run needed to reach the target.
    pub target_fraction: f64,
    /// total_bytes · target_fraction.
    pub bytes_to_target: f64,
    /// 1 − bytes_to_target / baseline's bytes_to_target.
    pub reduction_vs_baseline: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    pub rows: Vec<CostRow>,
}

/// Turns per-run cost inputs into the derived figures, measuring every
/// algorithm's traffic-to-target against the named baseline's.
pub fn cost_report(entries: &[CostEntry], baseline: &str) -> Result<CostLedger, MetricError> {
    for e in entries {
        if e.rounds_total == 0 {
            return Err(MetricError::ZeroRounds {
                name: e.algorithm.clone(),
            });
        }
    }
    let partial: Vec<(u64, f64, f64)> = entries
        .iter()
        .map(|e| {
            let per_round = e.overhead * 2.0 * e.model_bytes as f64 * e.cohort_size as f64;
            let total = per_round * e.rounds_total as f64;
            let reached = e.rounds_to_target.unwrap_or(e.rounds_total);
            let fraction = reached as f64 / e.rounds_total as f64;
            (reached, fraction, total)
        })
        .collect();
    let base_index = entries
        .iter()
        .position(|e| e.algorithm == baseline)
        .ok_or_else(|| MetricError::MissingBaseline {
            name: baseline.to_string(),
        })?;
    let base_bytes_to_target = partial[base_index].2 * partial[base_index].1;
    if base_bytes_to_target == 0.0 {
        return Err(MetricError::ZeroBaseline);
    }
    let rows = entries
        .iter()
        .zip(&partial)
        .map(|(e, &(reached, fraction, total))| {
            let bytes_to_target = total * fraction;
            CostRow {
                algorithm: e.algorithm.clone(),
                overhead: e.overhead,
                model_bytes: e.model_bytes,
                cohort_size: e.cohort_size,
                rounds_total: e.rounds_total,
                rounds_to_target: reached,
                total_bytes: total as u64,
                target_fraction: fraction,
                bytes_to_target,
                reduction_vs_baseline: 1.0 - bytes_to_target / base_bytes_to_target,
            }
        })
        .collect();
    Ok(CostLedger { rows })
}
