//! Client and server update rules for the simulated algorithms, plus the
//! state each of them persists between rounds.
//!
//! The momentum family is built around one quantity: the τ-round model
//! displacement m̃ = (θ^{t-1} − θ^{t-τ-1})/(τJ), recomputed every round from
//! a ring buffer of past global models. FedCM is exactly the τ=1 member of
//! that family and shares its code path. LocalGHBM and FedHBM derive the
//! same displacement from models stored on the client instead of server
//! history, which frees the server from tracking τ and lets each client's
//! effective window equal its own participation gap.

use crate::params::{ParamError, ParamVector};
use crate::tasks::{self, Batch, Dataset, TaskError, TaskKind};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgoError {
    #[error("momentum weight must be in [0, 1], got {beta}")]
    BadBeta { beta: f64 },
    #[error("momentum window must be at least 1 round")]
    ZeroTau,
    #[error("proximal weight must be non-negative, got {mu}")]
    BadMu { mu: f64 },
    #[error("model history is empty")]
    EmptyHistory,
    #[error("model history does not contain round {round}")]
    MissingHistory { round: u64 },
    #[error("expected {expected} batches for {expected} local steps, got {found}")]
    BatchCount { expected: usize, found: usize },
    #[error("no client results to aggregate")]
    EmptyAggregate,
    #[error("server state is missing its {what}")]
    MissingState { what: &'static str },
    #[error("client result for {client} is missing its control update")]
    MissingControl { client: usize },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Which federated algorithm drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgoKind {
    FedAvg,
    FedAvgM { beta: f64 },
    FedProx { mu: f64 },
    FedCm { beta: f64 },
    Scaffold,
    GhbmPractical { beta: f64, tau: usize },
    GhbmTheory { beta: f64, tau: usize },
    LocalGhbm { beta: f64 },
    FedHbm { beta: f64 },
}

impl AlgoKind {
    pub fn validate(&self) -> Result<(), AlgoError> {
        match *self {
            AlgoKind::FedAvg | AlgoKind::Scaffold => Ok(()),
            AlgoKind::FedProx { mu } => {
                if mu >= 0.0 {
                    Ok(())
                } else {
                    Err(AlgoError::BadMu { mu })
                }
            }
            AlgoKind::FedAvgM { beta }
            | AlgoKind::FedCm { beta }
            | AlgoKind::LocalGhbm { beta }
            | AlgoKind::FedHbm { beta } => check_beta(beta),
            AlgoKind::GhbmPractical { beta, tau } | AlgoKind::GhbmTheory { beta, tau } => {
                check_beta(beta)?;
                if tau == 0 {
                    Err(AlgoError::ZeroTau)
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Momentum weight β; zero for algorithms without one.
    pub fn beta(&self) -> f64 {
        match *self {
            AlgoKind::FedAvg | AlgoKind::FedProx { .. } | AlgoKind::Scaffold => 0.0,
            AlgoKind::FedAvgM { beta }
            | AlgoKind::FedCm { beta }
            | AlgoKind::GhbmPractical { beta, .. }
            | AlgoKind::GhbmTheory { beta, .. }
            | AlgoKind::LocalGhbm { beta }
            | AlgoKind::FedHbm { beta } => beta,
        }
    }

    /// Window length τ for algorithms whose momentum comes from the server's
    /// model history: 1 for FedCM, configured τ for practical GHBM.
    pub fn momentum_window(&self) -> Option<usize> {
        match *self {
            AlgoKind::FedCm { .. } => Some(1),
            AlgoKind::GhbmPractical { tau, .. } => Some(tau),
            _ => None,
        }
    }

    /// True when clients must persist state across participations.
    pub fn is_stateful(&self) -> bool {
        matches!(
            self,
            AlgoKind::Scaffold | AlgoKind::LocalGhbm { .. } | AlgoKind::FedHbm { .. }
        )
    }

    /// Per-round communication volume as a multiple of FedAvg's
    /// (model down + model up). Momentum-broadcasting algorithms pay 1.5x,
    /// SCAFFOLD's control variates double the traffic.
    pub fn comm_overhead(&self) -> f64 {
        match self {
            AlgoKind::FedAvg
            | AlgoKind::FedAvgM { .. }
            | AlgoKind::FedProx { .. }
            | AlgoKind::LocalGhbm { .. }
            | AlgoKind::FedHbm { .. } => 1.0,
            AlgoKind::FedCm { .. } | AlgoKind::GhbmPractical { .. } | AlgoKind::GhbmTheory { .. } => 1.5,
            AlgoKind::Scaffold => 2.0,
        }
    }

    /// Display name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            AlgoKind::FedAvg => "FedAvg",
            AlgoKind::FedAvgM { .. } => "FedAvgM",
            AlgoKind::FedProx { .. } => "FedProx",
            AlgoKind::FedCm { .. } => "FedCM",
            AlgoKind::Scaffold => "Scaffold",
            AlgoKind::GhbmPractical { .. } => "GhbmPractical",
            AlgoKind::GhbmTheory { .. } => "GhbmTheory",
            AlgoKind::LocalGhbm { .. } => "LocalGhbm",
            AlgoKind::FedHbm { .. } => "FedHbm",
        }
    }
}

fn check_beta(beta: f64) -> Result<(), AlgoError> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(AlgoError::BadBeta { beta })
    }
}

/// Bounded ring buffer of `(round, model)` pairs, oldest evicted first.
#[derive(Debug, Clone)]
pub struct ModelHistory {
    capacity: usize,
    entries: VecDeque<(u64, ParamVector)>,
}

impl ModelHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends the model for `round`; rounds must arrive in increasing order.
    pub fn push(&mut self, round: u64, model: ParamVector) {
        debug_assert!(self
            .entries
            .back()
            .map_or(true, |(last, _)| *last < round));
        self.entries.push_back((round, model));
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn get(&self, round: u64) -> Option<&ParamVector> {
        self.entries
            .iter()
            .find(|(r, _)| *r == round)
            .map(|(_, m)| m)
    }

    pub fn latest(&self) -> Option<(u64, &ParamVector)> {
        self.entries.back().map(|(r, m)| (*r, m))
    }

    pub fn earliest(&self) -> Option<(u64, &ParamVector)> {
        self.entries.front().map(|(r, m)| (*r, m))
    }
}

/// Everything the server carries between rounds.
#[derive(Debug, Clone)]
pub struct ServerState {
    /// Rounds completed so far; the stored model is θ^round.
    pub round: u64,
    pub model: ParamVector,
    /// Moving-average momentum (FedAvgM, theory-version GHBM).
    pub momentum: Option<ParamVector>,
    /// Recent global models, capacity τ+1 (FedCM, practical GHBM).
    pub model_history: Option<ModelHistory>,
    /// Recent auxiliary models θ̄, capacity τ+1 (theory-version GHBM).
    pub bar_history: Option<ModelHistory>,
    /// Server control variate c (SCAFFOLD).
    pub control: Option<ParamVector>,
}

impl ServerState {
    /// Allocates exactly the state `kind` needs, seeded at round 0 with the
    /// initial model.
    pub fn new(kind: &AlgoKind, init: ParamVector) -> Result<Self, AlgoError> {
        kind.validate()?;
        let dim = init.dim();
        let mut state = Self {
            round: 0,
            model: init,
            momentum: None,
            model_history: None,
            bar_history: None,
            control: None,
        };
        match kind {
            AlgoKind::FedAvgM { .. } => {
                state.momentum = Some(ParamVector::zeros(dim)?);
            }
            AlgoKind::Scaffold => {
                state.control = Some(ParamVector::zeros(dim)?);
            }
            AlgoKind::GhbmTheory { tau, .. } => {
                state.momentum = Some(ParamVector::zeros(dim)?);
                let mut bars = ModelHistory::new(tau + 1);
                bars.push(0, state.model.clone());
                state.bar_history = Some(bars);
            }
            _ => {}
        }
        if let Some(tau) = kind.momentum_window() {
            let mut history = ModelHistory::new(tau + 1);
            history.push(0, state.model.clone());
            state.model_history = Some(history);
        }
        Ok(state)
    }
}

/// Per-client persistent state; default is the blank stateless client.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClientState {
    pub stored_model: Option<ParamVector>,
    pub stored_round: Option<u64>,
    /// Client control variate c_i (SCAFFOLD).
    pub control: Option<ParamVector>,
}

/// Moving-average momentum update m̃ ← β·m_prev + g; β=0 returns g itself.
pub fn hbm_moving_average(
    m_prev: &ParamVector,
    g: &ParamVector,
    beta: f64,
) -> Result<ParamVector, AlgoError> {
    if beta == 0.0 {
        if m_prev.dim() != g.dim() {
            return Err(ParamError::DimMismatch {
                left: m_prev.dim(),
                right: g.dim(),
            }
            .into());
        }
        return Ok(g.clone());
    }
    let mut m = m_prev.scaled(beta);
    m.axpy(1.0, g)?;
    Ok(m)
}

/// The τ-window displacement momentum at the start of round `t`:
/// (θ^{t-1} − θ^{t-1-s})/(s·J) with the available span s = min(τ, t−1);
/// zeros at t=1, when no displacement exists yet.
pub fn ghbm_momentum(
    history: &ModelHistory,
    tau: usize,
    local_steps: usize,
    t: u64,
) -> Result<ParamVector, AlgoError> {
    let (latest_round, latest) = history.latest().ok_or(AlgoError::EmptyHistory)?;
    if t <= 1 {
        return Ok(ParamVector::zeros(latest.dim())?);
    }
    if latest_round != t - 1 {
        return Err(AlgoError::MissingHistory { round: t - 1 });
    }
    let span = (tau as u64).min(t - 1);
    let past_round = t - 1 - span;
    let past = history
        .get(past_round)
        .ok_or(AlgoError::MissingHistory { round: past_round })?;
    let mut m = latest.sub(past)?;
    m.scale(1.0 / (span as f64 * local_steps as f64));
    Ok(m)
}

/// Read-only inputs for one client's local work in round `round`.
#[derive(Debug, Clone, Copy)]
pub struct ClientRoundInput<'a> {
    pub kind: &'a AlgoKind,
    /// Broadcast global model θ^{t-1}.
    pub global_model: &'a ParamVector,
    pub round: u64,
    pub local_steps: usize,
    pub client_lr: f64,
    pub weight_decay: f64,
    /// Round-constant momentum m̃ for FedCM / practical GHBM / theory GHBM.
    pub round_momentum: Option<&'a ParamVector>,
    /// Server control variate c (SCAFFOLD).
    pub server_control: Option<&'a ParamVector>,
    pub state: &'a ClientState,
}

/// What a client hands back to the server.
#[derive(Debug, Clone)]
pub struct ClientRoundOutput {
    /// Final local model θ_i^{t,J}.
    pub final_model: ParamVector,
    /// Updated control variate c_i' (SCAFFOLD only).
    pub new_control: Option<ParamVector>,
    /// Batch-gradient evaluations performed (work accounting).
    pub grad_evals: u64,
}

/// Runs J local steps from the broadcast model and returns the final local
/// model. Never mutates its inputs; state commits happen in the orchestrator
/// after the whole cohort finishes.
pub fn client_round(
    input: &ClientRoundInput,
    task: &TaskKind,
    data: &Dataset,
    batches: &[Vec<usize>],
) -> Result<ClientRoundOutput, AlgoError> {
    input.kind.validate()?;
    if batches.len() != input.local_steps {
        return Err(AlgoError::BatchCount {
            expected: input.local_steps,
            found: batches.len(),
        });
    }
    let dim = input.global_model.dim();
    let beta = input.kind.beta();
    let lr = input.client_lr;

    // Round-constant client-side momentum, where the algorithm has one.
    let local_momentum: Option<ParamVector> = match input.kind {
        AlgoKind::LocalGhbm { .. } => match (&input.state.stored_model, input.state.stored_round) {
            (Some(stored), Some(stored_round)) => {
                let gap = input.round.saturating_sub(stored_round).max(1);
                let mut m = input.global_model.sub(stored)?;
                m.scale(1.0 / (gap as f64 * input.local_steps as f64));
                Some(m)
            }
            _ => None,
        },
        _ => None,
    };
    // FedHBM's window is its participation gap; the displacement itself is
    // recomputed from the live iterate inside the step loop.
    let fedhbm_scale: Option<f64> = match input.kind {
        AlgoKind::FedHbm { .. } => input.state.stored_round.map(|stored_round| {
            let gap = input.round.saturating_sub(stored_round).max(1);
            beta / (gap as f64 * input.local_steps as f64)
        }),
        _ => None,
    };

    let mut theta = input.global_model.clone();
    let mut grad_evals = 0u64;
    for batch in batches {
        let mut g = tasks::grad(task, &theta, data, Batch::new(batch))?;
        grad_evals += 1;
        if input.weight_decay != 0.0 {
            g.axpy(input.weight_decay, &theta)?;
        }
        match input.kind {
            AlgoKind::FedAvg | AlgoKind::FedAvgM { .. } => {
                theta.axpy(-lr, &g)?;
            }
            AlgoKind::FedProx { mu } => {
                if *mu != 0.0 {
                    g.axpy(*mu, &theta)?;
                    g.axpy(-mu, input.global_model)?;
                }
                theta.axpy(-lr, &g)?;
            }
            AlgoKind::FedCm { .. } | AlgoKind::GhbmPractical { .. } => {
                theta.axpy(-lr, &g)?;
                if beta != 0.0 {
                    let m = input
                        .round_momentum
                        .ok_or(AlgoError::MissingState { what: "round momentum" })?;
                    theta.axpy(beta, m)?;
                }
            }
            AlgoKind::LocalGhbm { .. } => {
                theta.axpy(-lr, &g)?;
                if beta != 0.0 {
                    if let Some(m) = &local_momentum {
                        theta.axpy(beta, m)?;
                    }
                }
            }
            AlgoKind::FedHbm { .. } => {
                let displacement = match (&input.state.stored_model, fedhbm_scale) {
                    (Some(stored), Some(scale)) if scale != 0.0 => {
                        Some((theta.sub(stored)?, scale))
                    }
                    _ => None,
                };
                theta.axpy(-lr, &g)?;
                if let Some((d, scale)) = displacement {
                    theta.axpy(scale, &d)?;
                }
            }
            AlgoKind::Scaffold => {
                if let Some(ci) = &input.state.control {
                    g.axpy(-1.0, ci)?;
                }
                if let Some(c) = input.server_control {
                    g.axpy(1.0, c)?;
                }
                theta.axpy(-lr, &g)?;
            }
            AlgoKind::GhbmTheory { .. } => {
                let m = input
                    .round_momentum
                    .ok_or(AlgoError::MissingState { what: "round momentum" })?;
                let mut dir = g.scaled(beta);
                dir.axpy(1.0 - beta, m)?;
                theta.axpy(-lr, &dir)?;
            }
        }
    }

    let new_control = if matches!(input.kind, AlgoKind::Scaffold) {
        let zeros = ParamVector::zeros(dim)?;
        let ci = input.state.control.as_ref().unwrap_or(&zeros);
        let c = input.server_control.unwrap_or(&zeros);
        Some(scaffold_client_control_update(
            ci,
            c,
            input.global_model,
            &theta,
            input.local_steps,
            lr,
        )?)
    } else {
        None
    };

    Ok(ClientRoundOutput {
        final_model: theta,
        new_control,
        grad_evals,
    })
}

/// SCAFFOLD option II: c_i' = c_i − c + (θ_global − θ_final)/(J·η_l).
pub fn scaffold_client_control_update(
    client_control: &ParamVector,
    server_control: &ParamVector,
    global_model: &ParamVector,
    final_local: &ParamVector,
    local_steps: usize,
    client_lr: f64,
) -> Result<ParamVector, AlgoError> {
    let mut c = client_control.clone();
    c.axpy(-1.0, server_control)?;
    let mut displacement = global_model.sub(final_local)?;
    displacement.scale(1.0 / (local_steps as f64 * client_lr));
    c.axpy(1.0, &displacement)?;
    Ok(c)
}

/// LocalGHBM stores the model the client received in round `t`.
pub fn localghbm_store(state: &mut ClientState, received_global: &ParamVector, round: u64) {
    state.stored_model = Some(received_global.clone());
    state.stored_round = Some(round);
}

/// FedHBM stores the final local model the client produced in round `t`.
pub fn fedhbm_store(state: &mut ClientState, final_local: &ParamVector, round: u64) {
    state.stored_model = Some(final_local.clone());
    state.stored_round = Some(round);
}

/// One participant's contribution to the server update.
#[derive(Debug, Clone)]
pub struct CohortResult {
    pub client: usize,
    pub final_model: ParamVector,
    /// c_i' − c_i (SCAFFOLD only).
    pub control_delta: Option<ParamVector>,
}

/// Applies the server-side update for round `state.round + 1` and returns
/// the pseudo-gradient g̃ = mean(θ^{t-1} − θ_i^{t,J}). Results are folded in
/// ascending client id no matter the arrival order.
pub fn server_update(
    kind: &AlgoKind,
    state: &mut ServerState,
    results: &mut [CohortResult],
    eta: f64,
    eta_l: f64,
    local_steps: usize,
    clients_total: usize,
) -> Result<ParamVector, AlgoError> {
    if results.is_empty() {
        return Err(AlgoError::EmptyAggregate);
    }
    results.sort_by_key(|r| r.client);
    let t = state.round + 1;
    let theta_prev = state.model.clone();

    let diffs: Vec<ParamVector> = results
        .iter()
        .map(|r| theta_prev.sub(&r.final_model))
        .collect::<Result<_, _>>()?;
    let pseudo_grad = ParamVector::mean(&diffs)?;

    match kind {
        AlgoKind::FedAvg
        | AlgoKind::FedProx { .. }
        | AlgoKind::FedCm { .. }
        | AlgoKind::GhbmPractical { .. }
        | AlgoKind::LocalGhbm { .. }
        | AlgoKind::FedHbm { .. } => {
            state.model.axpy(-eta, &pseudo_grad)?;
        }
        AlgoKind::FedAvgM { beta } => {
            let momentum = state
                .momentum
                .take()
                .ok_or(AlgoError::MissingState { what: "momentum" })?;
            let momentum = hbm_moving_average(&momentum, &pseudo_grad, *beta)?;
            state.model.axpy(-eta, &momentum)?;
            state.momentum = Some(momentum);
        }
        AlgoKind::Scaffold => {
            state.model.axpy(-eta, &pseudo_grad)?;
            let deltas: Vec<ParamVector> = results
                .iter()
                .map(|r| {
                    r.control_delta
                        .clone()
                        .ok_or(AlgoError::MissingControl { client: r.client })
                })
                .collect::<Result<_, _>>()?;
            let mean_delta = ParamVector::mean(&deltas)?;
            let control = state
                .control
                .as_mut()
                .ok_or(AlgoError::MissingState { what: "server control" })?;
            control.axpy(results.len() as f64 / clients_total as f64, &mean_delta)?;
        }
        AlgoKind::GhbmTheory { beta, tau } => {
            let momentum_prev = state
                .momentum
                .take()
                .ok_or(AlgoError::MissingState { what: "momentum" })?;
            let bars = state
                .bar_history
                .as_mut()
                .ok_or(AlgoError::MissingState { what: "auxiliary history" })?;
            // u^t: the aggregated direction rescaled back to gradient units.
            let u = pseudo_grad.scaled(1.0 / (eta_l * local_steps as f64));
            let mut bar_t = theta_prev.clone();
            bar_t.axpy(-1.0, &u)?;
            bar_t.axpy(1.0 - beta, &momentum_prev)?;
            let past_round = t.saturating_sub(*tau as u64);
            let bar_past = bars
                .get(past_round)
                .ok_or(AlgoError::MissingHistory { round: past_round })?
                .clone();
            let mut momentum = momentum_prev.scaled(1.0 - beta);
            let mut drift = bar_past.sub(&bar_t)?;
            drift.scale(1.0 / *tau as f64);
            momentum.axpy(1.0, &drift)?;
            bars.push(t, bar_t);
            state.model.axpy(-eta, &momentum)?;
            state.momentum = Some(momentum);
        }
    }

    if let Some(history) = state.model_history.as_mut() {
        history.push(t, state.model.clone());
    }
    state.round = t;
    Ok(pseudo_grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::generate_quadratic_dataset;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn moving_average_examples() {
        let zero = pv(&[0.0]);
        let one = pv(&[1.0]);
        assert_eq!(
            hbm_moving_average(&zero, &one, 0.9).unwrap().as_slice(),
            &[1.0]
        );
        assert_eq!(
            hbm_moving_average(&one, &one, 0.9).unwrap().as_slice(),
            &[1.9]
        );
        let g = pv(&[0.25, -0.5]);
        let m = hbm_moving_average(&pv(&[7.0, 9.0]), &g, 0.0).unwrap();
        assert!(m.bitwise_eq(&g));
    }

    #[test]
    fn ghbm_momentum_warm_up_and_window() {
        let mut history = ModelHistory::new(3);
        history.push(0, pv(&[0.0]));
        // No displacement yet at t=1.
        let m = ghbm_momentum(&history, 2, 4, 1).unwrap();
        assert_eq!(m.as_slice(), &[0.0]);
        // t=2: span is 1, not τ.
        history.push(1, pv(&[1.0]));
        let m = ghbm_momentum(&history, 2, 4, 2).unwrap();
        assert_eq!(m.as_slice(), &[0.25]);
        // Full window: (θ^{t-1} − θ^{t-3})/(2·4) with θ^{t-1}=2, θ^{t-3}=0.
        history.push(2, pv(&[2.0]));
        let m = ghbm_momentum(&history, 2, 4, 3).unwrap();
        assert_eq!(m.as_slice(), &[0.25]);
        // Stationary history gives zeros.
        let mut flat = ModelHistory::new(3);
        flat.push(0, pv(&[5.0]));
        flat.push(1, pv(&[5.0]));
        assert_eq!(ghbm_momentum(&flat, 1, 2, 2).unwrap().as_slice(), &[0.0]);
    }

    #[test]
    fn ghbm_momentum_error_paths() {
        let empty = ModelHistory::new(2);
        assert!(matches!(
            ghbm_momentum(&empty, 1, 1, 1),
            Err(AlgoError::EmptyHistory)
        ));
        let mut history = ModelHistory::new(2);
        history.push(3, pv(&[1.0]));
        assert!(matches!(
            ghbm_momentum(&history, 1, 1, 3),
            Err(AlgoError::MissingHistory { round: 2 })
        ));
    }

    #[test]
    fn history_ring_buffer_evicts_oldest() {
        let mut h = ModelHistory::new(2);
        h.push(0, pv(&[0.0]));
        h.push(1, pv(&[1.0]));
        h.push(2, pv(&[2.0]));
        assert_eq!(h.len(), 2);
        assert!(h.get(0).is_none());
        assert_eq!(h.earliest().unwrap().0, 1);
        assert_eq!(h.latest().unwrap().0, 2);
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(matches!(
            AlgoKind::FedAvgM { beta: 1.5 }.validate(),
            Err(AlgoError::BadBeta { .. })
        ));
        assert!(matches!(
            AlgoKind::GhbmPractical { beta: 0.9, tau: 0 }.validate(),
            Err(AlgoError::ZeroTau)
        ));
        assert!(matches!(
            AlgoKind::FedProx { mu: -0.1 }.validate(),
            Err(AlgoError::BadMu { .. })
        ));
        AlgoKind::GhbmTheory { beta: 1.0, tau: 3 }.validate().unwrap();
    }

    fn tiny_dataset() -> Dataset {
        generate_quadratic_dataset(8, -1.0, 1.0, (2.0, -1.0, 0.5), 0.0, 3).unwrap()
    }

    fn sgd_oracle(theta: &ParamVector, g: &ParamVector, lr: f64) -> ParamVector {
        let mut out = theta.clone();
        for k in 0..out.dim() {
            out[k] = theta[k] - lr * g[k];
        }
        out
    }

    #[test]
    fn single_step_zero_corrections_collapse_to_sgd() {
        let data = tiny_dataset();
        let task = TaskKind::QuadraticRegression;
        let theta = pv(&[0.5, -0.25, 1.0]);
        let batch: Vec<usize> = (0..8).collect();
        let g = tasks::grad(&task, &theta, &data, Batch::new(&batch)).unwrap();
        let expect = sgd_oracle(&theta, &g, 0.05);
        let state = ClientState::default();
        let zeros = ParamVector::zeros(3).unwrap();
        for kind in [
            AlgoKind::FedAvg,
            AlgoKind::FedAvgM { beta: 0.0 },
            AlgoKind::FedProx { mu: 0.0 },
            AlgoKind::FedCm { beta: 0.0 },
            AlgoKind::Scaffold,
            AlgoKind::GhbmPractical { beta: 0.0, tau: 2 },
            AlgoKind::LocalGhbm { beta: 0.0 },
            AlgoKind::FedHbm { beta: 0.0 },
        ] {
            let input = ClientRoundInput {
                kind: &kind,
                global_model: &theta,
                round: 1,
                local_steps: 1,
                client_lr: 0.05,
                weight_decay: 0.0,
                round_momentum: Some(&zeros),
                server_control: None,
                state: &state,
            };
            let out = client_round(&input, &task, &data, &[batch.clone()]).unwrap();
            assert!(
                out.final_model.bitwise_eq(&expect),
                "{kind:?} deviated from the single SGD step"
            );
        }
        // Theory-version GHBM with β=1 ignores the momentum input entirely.
        let input = ClientRoundInput {
            kind: &AlgoKind::GhbmTheory { beta: 1.0, tau: 2 },
            global_model: &theta,
            round: 1,
            local_steps: 1,
            client_lr: 0.05,
            weight_decay: 0.0,
            round_momentum: Some(&zeros),
            server_control: None,
            state: &state,
        };
        let out = client_round(&input, &task, &data, &[batch.clone()]).unwrap();
        let err = out.final_model.sub(&expect).unwrap().norm_sq().sqrt();
        assert!(err < 1e-15, "theory-version step should be one SGD step, err {err}");
    }

    #[test]
    fn client_round_leaves_global_model_untouched() {
        let data = tiny_dataset();
        let task = TaskKind::QuadraticRegression;
        let theta = pv(&[1.0, 2.0, 3.0]);
        let before = theta.clone();
        let state = ClientState::default();
        let input = ClientRoundInput {
            kind: &AlgoKind::FedAvg,
            global_model: &theta,
            round: 1,
            local_steps: 3,
            client_lr: 0.01,
            weight_decay: 0.1,
            round_momentum: None,
            server_control: None,
            state: &state,
        };
        let batches = vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7]];
        client_round(&input, &task, &data, &batches).unwrap();
        assert!(theta.bitwise_eq(&before));
    }

    #[test]
    fn batch_count_must_match_local_steps() {
        let data = tiny_dataset();
        let input_state = ClientState::default();
        let theta = pv(&[0.0, 0.0, 0.0]);
        let input = ClientRoundInput {
            kind: &AlgoKind::FedAvg,
            global_model: &theta,
            round: 1,
            local_steps: 2,
            client_lr: 0.1,
            weight_decay: 0.0,
            round_momentum: None,
            server_control: None,
            state: &input_state,
        };
        let result = client_round(&input, &TaskKind::QuadraticRegression, &data, &[vec![0]]);
        assert!(matches!(
            result,
            Err(AlgoError::BatchCount {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn scaffold_control_update_examples() {
        let c_i = pv(&[0.5, -0.5]);
        let theta = pv(&[1.0, 2.0]);
        // No movement under a zero server control: the client control keeps
        // its old value.
        let zero_c = ParamVector::zeros(2).unwrap();
        let out = scaffold_client_control_update(&c_i, &zero_c, &theta, &theta, 4, 0.1).unwrap();
        assert_eq!(out.as_slice(), c_i.as_slice());
        // When c = c_i, the two controls cancel and no movement leaves zero.
        let out = scaffold_client_control_update(&c_i, &c_i, &theta, &theta, 4, 0.1).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
        // Zero controls, J=1: recovers exactly the applied gradient.
        let g = pv(&[0.25, -1.5]);
        let zeros = ParamVector::zeros(2).unwrap();
        let mut theta_final = theta.clone();
        theta_final.axpy(-0.5, &g).unwrap();
        let out =
            scaffold_client_control_update(&zeros, &zeros, &theta, &theta_final, 1, 0.5).unwrap();
        assert!(out.bitwise_eq(&g));
    }

    #[test]
    fn scaffold_server_control_tracks_mean_of_client_controls() {
        // Full participation, exact arithmetic: if c is the mean of the old
        // c_i, the updated c equals the mean of the new c_i'.
        let old: Vec<ParamVector> = vec![pv(&[1.0, 0.0]), pv(&[0.0, 2.0]), pv(&[-1.0, 1.0])];
        let c = ParamVector::mean(&old).unwrap();
        let new: Vec<ParamVector> = vec![pv(&[0.5, 0.25]), pv(&[0.125, 1.0]), pv(&[-2.0, 0.5])];
        let mut server_c = c.clone();
        let deltas: Vec<ParamVector> = new.iter().zip(&old).map(|(n, o)| n.sub(o).unwrap()).collect();
        let mean_delta = ParamVector::mean(&deltas).unwrap();
        server_c.axpy(3.0 / 3.0, &mean_delta).unwrap();
        let target = ParamVector::mean(&new).unwrap();
        let err = server_c.sub(&target).unwrap().norm_sq().sqrt();
        assert!(err < 1e-15, "control drifted from the mean: {err}");
    }

    #[test]
    fn storage_ops_replace_previous_entries() {
        let mut state = ClientState::default();
        localghbm_store(&mut state, &pv(&[1.0]), 3);
        assert_eq!(state.stored_round, Some(3));
        assert_eq!(state.stored_model.as_ref().unwrap().as_slice(), &[1.0]);
        fedhbm_store(&mut state, &pv(&[2.0]), 7);
        assert_eq!(state.stored_round, Some(7));
        assert_eq!(state.stored_model.as_ref().unwrap().as_slice(), &[2.0]);
    }

    #[test]
    fn server_update_identity_reduction() {
        // One client, J=1, η=1: the server lands exactly on the client model.
        let kind = AlgoKind::FedAvg;
        let mut state = ServerState::new(&kind, pv(&[2.0, -4.0])).unwrap();
        let mut results = vec![CohortResult {
            client: 0,
            final_model: pv(&[1.5, -3.0]),
            control_delta: None,
        }];
        let g = server_update(&kind, &mut state, &mut results, 1.0, 0.1, 1, 1).unwrap();
        assert_eq!(state.model.as_slice(), &[1.5, -3.0]);
        assert_eq!(g.as_slice(), &[0.5, -1.0]);
        assert_eq!(state.round, 1);
    }

    #[test]
    fn server_update_fixed_point_decays_fedavgm_momentum() {
        let kind = AlgoKind::FedAvgM { beta: 0.5 };
        let mut state = ServerState::new(&kind, pv(&[1.0])).unwrap();
        state.momentum = Some(pv(&[0.8]));
        let mut results = vec![CohortResult {
            client: 0,
            final_model: pv(&[1.0]),
            control_delta: None,
        }];
        server_update(&kind, &mut state, &mut results, 1.0, 0.1, 1, 1).unwrap();
        // g̃ = 0, so m̃ halves and θ moves by -η·m̃.
        assert_eq!(state.momentum.as_ref().unwrap().as_slice(), &[0.4]);
        assert_eq!(state.model.as_slice(), &[0.6]);
    }

    #[test]
    fn server_update_sorts_results_by_client_id() {
        let kind = AlgoKind::FedAvg;
        let init = pv(&[0.0]);
        let mk = |ids: [usize; 3]| -> Vec<CohortResult> {
            ids.iter()
                .map(|&i| CohortResult {
                    client: i,
                    final_model: pv(&[(i + 1) as f64 * 0.7]),
                    control_delta: None,
                })
                .collect()
        };
        let mut a = mk([2, 0, 1]);
        let mut b = mk([0, 1, 2]);
        let mut sa = ServerState::new(&kind, init.clone()).unwrap();
        let mut sb = ServerState::new(&kind, init).unwrap();
        let ga = server_update(&kind, &mut sa, &mut a, 0.5, 0.1, 1, 3).unwrap();
        let gb = server_update(&kind, &mut sb, &mut b, 0.5, 0.1, 1, 3).unwrap();
        assert!(ga.bitwise_eq(&gb));
        assert!(sa.model.bitwise_eq(&sb.model));
    }

    #[test]
    fn server_update_rejects_empty_cohort() {
        let kind = AlgoKind::FedAvg;
        let mut state = ServerState::new(&kind, pv(&[0.0])).unwrap();
        assert!(matches!(
            server_update(&kind, &mut state, &mut [], 1.0, 0.1, 1, 1),
            Err(AlgoError::EmptyAggregate)
        ));
    }

    #[test]
    fn model_history_follows_server_rounds() {
        let kind = AlgoKind::GhbmPractical { beta: 0.9, tau: 2 };
        let mut state = ServerState::new(&kind, pv(&[0.0])).unwrap();
        for t in 1..=5u64 {
            let mut results = vec![CohortResult {
                client: 0,
                final_model: pv(&[t as f64]),
                control_delta: None,
            }];
            server_update(&kind, &mut state, &mut results, 1.0, 0.1, 1, 1).unwrap();
        }
        let history = state.model_history.as_ref().unwrap();
        assert_eq!(history.len(), 3);
        assert_eq!(history.earliest().unwrap().0, 3);
        assert_eq!(history.latest().unwrap().0, 5);
    }

    #[test]
    fn algo_kind_round_trips_serde() {
        let kind = AlgoKind::GhbmPractical { beta: 0.9, tau: 5 };
        let text = serde_json::to_string(&kind).unwrap();
        assert_eq!(text, r#"{"kind":"ghbm_practical","beta":0.9,"tau":5}"#);
        let back: AlgoKind = serde_json::from_str(&text).unwrap();
        assert_eq!(back, kind);
    }
}
