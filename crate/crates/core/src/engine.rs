//! Round-loop orchestration: builds the federation from a config, runs
//! synchronous rounds, and collects per-round metrics.
//!
//! Determinism is the engine's core guarantee. Every random choice is a
//! pure function of the master seed, so rerunning a config reproduces the
//! trajectory bit for bit, including across worker-pool sizes: parallel
//! client work is collected in submission order and every reduction folds
//! in ascending client id.

use crate::algorithms::{
    self, AlgoError, AlgoKind, ClientRoundInput, ClientRoundOutput, ClientState, CohortResult,
    ServerState,
};
use crate::data::{self, Partition, PartitionError};
use crate::metrics::{self, DeviationSample, MetricError, MetricKind};
use crate::params::{ParamError, ParamVector};
use crate::rng;
use crate::sampling::{Sampler, SamplerError, SamplerKind};
use crate::tasks::{self, Dataset, TaskError, TaskKind};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Where the examples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Scalar-input regression targets a*x² + b*x + c on an equally spaced
    /// grid, with optional Gaussian label noise.
    Quadratic {
        n: usize,
        x_low: f64,
        x_high: f64,
        a: f64,
        b: f64,
        c: f64,
        #[serde(default)]
        noise_std: f64,
    },
    /// Gaussian class clusters; dimensions and class count come from the task.
    Blobs { n: usize, cluster_spread: f64 },
    /// Caller supplies the dataset through `run_with_dataset`.
    External,
}

/// How examples are assigned to clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    /// Random equal-size shards.
    Iid,
    /// Contiguous shards of the input-sorted examples, one input region each.
    DomainSplit,
    /// Label-skewed shards with Dirichlet-distributed class mixtures;
    /// alpha → 0 degenerates to one class per client, large alpha → uniform.
    Dirichlet { alpha: f64 },
}

/// Optional gradient-deviation probe configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Momentum windows to measure; each yields its own sample series.
    pub taus: Vec<usize>,
    /// Probe every this many rounds.
    #[serde(default = "default_every")]
    pub every: u64,
}

fn default_every() -> u64 {
    1
}

fn default_threads() -> usize {
    1
}

fn default_eval_every() -> u64 {
    1
}

fn default_test_fraction() -> f64 {
    0.2
}

/// Full description of one run. Serializes canonically (declaration order),
/// which is what the config hash covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    pub data: DataSpec,
    pub partition: PartitionSpec,
    pub algo: AlgoKind,
    pub clients: usize,
    pub sampler: SamplerKind,
    pub participation: f64,
    pub rounds: u64,
    pub local_steps: usize,
    pub server_lr: f64,
    pub client_lr: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |msg: &str| Err(EngineError::Config(msg.to_string()));
        self.task.validate()?;
        self.algo.validate()?;
        if self.clients == 0 {
            return fail("clients must be at least 1");
        }
        if self.rounds == 0 {
            return fail("rounds must be at least 1");
        }
        if self.local_steps == 0 {
            return fail("local_steps must be at least 1");
        }
        if !(self.server_lr.is_finite() && self.server_lr > 0.0) {
            return fail("server_lr must be positive and finite");
        }
        if !(self.client_lr.is_finite() && self.client_lr > 0.0) {
            return fail("client_lr must be positive and finite");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail("weight_decay must be non-negative and finite");
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1");
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return fail("test_fraction must lie in [0, 1)");
        }
        if self.threads == 0 {
            return fail("threads must be at least 1");
        }
        if self.batch_size == Some(0) {
            return fail("batch_size must be at least 1 when set");
        }
        match &self.data {
            DataSpec::Quadratic { n, x_low, x_high, noise_std, .. } => {
                if self.task.is_classification() {
                    return fail("quadratic data carries real labels, not classes");
                }
                if *n == 0 {
                    return fail("data n must be at least 1");
                }
                if !(x_low.is_finite() && x_high.is_finite() && x_low < x_high) {
                    return fail("quadratic data needs a non-empty finite input range");
                }
                if !(noise_std.is_finite() && *noise_std >= 0.0) {
                    return fail("noise_std must be non-negative and finite");
                }
            }
            DataSpec::Blobs { n, cluster_spread } => {
                if !self.task.is_classification() {
                    return fail("blob data carries class labels, not reals");
                }
                if *n == 0 {
                    return fail("data n must be at least 1");
                }
                if !(cluster_spread.is_finite() && *cluster_spread >= 0.0) {
                    return fail("cluster_spread must be non-negative and finite");
                }
            }
            DataSpec::External => {}
        }
        if let PartitionSpec::Dirichlet { alpha } = self.partition {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return fail("dirichlet alpha must be non-negative and finite");
            }
            if !self.task.is_classification() {
                return fail("dirichlet partitioning needs class labels");
            }
        }
        if let Some(probe) = &self.probe {
            if probe.taus.is_empty() {
                return fail("probe needs at least one window length");
            }
            if probe.taus.iter().any(|&t| t == 0) {
                return fail("probe windows must be at least 1 round");
            }
            if probe.every == 0 {
                return fail("probe cadence must be at least 1 round");
            }
        }
        // Sampler parameters are checked by constructing one.
        Sampler::new(self.sampler, self.clients, self.participation, 0)?;
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON form.
    pub fn hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        rng::fnv1a(text.as_bytes())
    }
}

/// One evaluated round in the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Probe value for the first configured window, when the probe fired
    /// on an evaluation round.
    pub deviation: Option<f64>,
    pub bytes_cum: u64,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config_hash: u64,
    pub seed: u64,
    pub rounds: u64,
    pub cohort_size: usize,
    pub model_bytes: u64,
    pub bytes_total: u64,
    pub work_units: u64,
    pub records: Vec<RoundRecord>,
    pub probe_samples: Vec<DeviationSample>,
    pub final_model: ParamVector,
}

/// Splits `n` examples into a training and a held-out index set with a
/// seeded shuffle; `fraction` is the held-out share, rounded down.
pub fn train_test_split(
    n: usize,
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, "split", &[]);
    indices.shuffle(&mut rng);
    let test_count = ((n as f64) * fraction).floor() as usize;
    let test_count = test_count.min(n.saturating_sub(1));
    let test: Vec<usize> = {
        let mut t = indices[..test_count].to_vec();
        t.sort_unstable();
        t
    };
    let train: Vec<usize> = {
        let mut t = indices[test_count..].to_vec();
        t.sort_unstable();
        t
    };
    (train, test)
}

/// Builds the J batch index lists for one client-round: one seeded shuffle,
/// consecutive chunks of `batch_size` (the final short chunk kept), cycled
/// when J exceeds the number of chunks. `None` means full-batch steps.
pub fn client_batches(
    n: usize,
    local_steps: usize,
    batch_size: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, EngineError> {
    if n == 0 {
        return Err(EngineError::Config(
            "client has no data to draw batches from".to_string(),
        ));
    }
    match batch_size {
        None => {
            let all: Vec<usize> = (0..n).collect();
            Ok(vec![all; local_steps])
        }
        Some(0) => Err(EngineError::Config(
            "batch_size must be at least 1 when set".to_string(),
        )),
        Some(b) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let chunks: Vec<Vec<usize>> = order.chunks(b).map(|c| c.to_vec()).collect();
            Ok((0..local_steps)
                .map(|j| chunks[j % chunks.len()].clone())
                .collect())
        }
    }
}

/// First evaluated round at which `metric` met `target`, if any.
pub fn rounds_to_target(result: &RunResult, metric: MetricKind, target: f64) -> Option<u64> {
    for r in &result.records {
        let value = match metric {
            MetricKind::TrainLoss => Some(r.train_loss),
            MetricKind::TestLoss => r.test_loss,
            MetricKind::TestAccuracy => r.test_accuracy,
        };
        if let Some(v) = value {
            if metric.reached(v, target) {
                return Some(r.round);
            }
        }
    }
    None
}

/// Mean of `metric` over the last max(1, rounds/10) evaluation records.
pub fn final_quality(result: &RunResult, metric: MetricKind) -> Option<f64> {
    let window = ((result.rounds / 10).max(1) as usize).min(result.records.len());
    let tail = &result.records[result.records.len() - window..];
    let values: Vec<f64> = tail
        .iter()
        .filter_map(|r| match metric {
            MetricKind::TrainLoss => Some(r.train_loss),
            MetricKind::TestLoss => r.test_loss,
            MetricKind::TestAccuracy => r.test_accuracy,
        })
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// A running federation: call `step` per round or `run_to_end`.
pub struct Simulation {
    config: RunConfig,
    task: TaskKind,
    train_data: Dataset,
    test_data: Option<Dataset>,
    client_data: Vec<Dataset>,
    sampler: Sampler,
    server: ServerState,
    client_states: Vec<ClientState>,
    pool: rayon::ThreadPool,
    window: Vec<ParamVector>,
    window_cap: usize,
    records: Vec<RoundRecord>,
    probe_samples: Vec<DeviationSample>,
    bytes_per_round: u64,
    bytes_cum: u64,
    work_units: u64,
    model_bytes: u64,
}

struct ClientWork {
    client: usize,
    output: ClientRoundOutput,
}

impl Simulation {
    /// Builds the federation, generating the dataset the config describes.
    pub fn new(config: RunConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let dataset = match &config.data {
            DataSpec::Quadratic {
                n,
                x_low,
                x_high,
                a,
                b,
                c,
                noise_std,
            } => tasks::generate_quadratic_dataset(
                *n,
                *x_low,
                *x_high,
                (*a, *b, *c),
                *noise_std,
                rng::sub_seed(config.seed, "data"),
            )?,
            DataSpec::Blobs { n, cluster_spread } => {
                let (classes, input_dim) = match &config.task {
                    TaskKind::LogisticRegression { classes, input_dim } => (*classes, *input_dim),
                    TaskKind::Mlp {
                        classes, input_dim, ..
                    } => (*classes, *input_dim),
                    TaskKind::QuadraticRegression => {
                        return Err(EngineError::Config(
                            "blob data carries class labels, not reals".to_string(),
                        ))
                    }
                };
                tasks::generate_synthetic_classification(
                    *n,
                    input_dim,
                    classes,
                    *cluster_spread,
                    rng::sub_seed(config.seed, "data"),
                )?
            }
            DataSpec::External => {
                return Err(EngineError::Config(
                    "external data requires run_with_dataset".to_string(),
                ))
            }
        };
        Self::with_dataset(config, dataset)
    }

    /// Builds the federation around a caller-supplied dataset.
    pub fn with_dataset(config: RunConfig, dataset: Dataset) -> Result<Self, EngineError> {
        config.validate()?;
        if dataset.input_dim() != config.task.input_dim() {
            return Err(EngineError::Config(format!(
                "dataset input dimension {} does not match the task's {}",
                dataset.input_dim(),
                config.task.input_dim()
            )));
        }
        let (train_idx, test_idx) =
            train_test_split(dataset.len(), config.test_fraction, config.seed);
        let train_data = dataset.subset(&train_idx)?;
        let test_data = if test_idx.is_empty() {
            None
        } else {
            Some(dataset.subset(&test_idx)?)
        };

        let partition = build_partition(&config, &train_data)?;
        let client_data: Vec<Dataset> = partition
            .iter()
            .map(|idx| train_data.subset(idx))
            .collect::<Result<_, _>>()?;

        let sampler = Sampler::new(
            config.sampler,
            config.clients,
            config.participation,
            rng::sub_seed(config.seed, "sampler"),
        )?;
        let init = config.task.init_params(config.seed)?;
        let model_bytes = 8 * init.dim() as u64;
        let bytes_per_round = (config.algo.comm_overhead()
            * 2.0
            * model_bytes as f64
            * sampler.cohort_size() as f64) as u64;
        let server = ServerState::new(&config.algo, init)?;
        let client_states = vec![ClientState::default(); config.clients];
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| EngineError::Pool(e.to_string()))?;
        let window_cap = config
            .probe
            .as_ref()
            .map(|p| p.taus.iter().copied().max().unwrap_or(1))
            .unwrap_or(0);

        let mut sim = Self {
            task: config.task.clone(),
            train_data,
            test_data,
            client_data,
            sampler,
            server,
            client_states,
            pool,
            window: Vec::new(),
            window_cap,
            records: Vec::new(),
            probe_samples: Vec::new(),
            bytes_per_round,
            bytes_cum: 0,
            work_units: 0,
            model_bytes,
            config,
        };
        sim.record_round(None)?;
        Ok(sim)
    }

    pub fn round(&self) -> u64 {
        self.server.round
    }

    pub fn model(&self) -> &ParamVector {
        &self.server.model
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn probe_samples(&self) -> &[DeviationSample] {
        &self.probe_samples
    }

    pub fn client_states(&self) -> &[ClientState] {
        &self.client_states
    }

    /// Drops all per-client state, as if every client were new.
    pub fn reset_client_states(&mut self) {
        for s in &mut self.client_states {
            *s = ClientState::default();
        }
    }

    /// Runs one synchronous round.
    pub fn step(&mut self) -> Result<(), EngineError> {
        let t = self.server.round + 1;
        let cohort = self.sampler.sample(t)?;
        let theta_prev = self.server.model.clone();

        let round_momentum: Option<ParamVector> = match &self.config.algo {
            AlgoKind::GhbmTheory { .. } => self.server.momentum.clone(),
            algo => match algo.momentum_window() {
                Some(tau) => {
                    let history = self
                        .server
                        .model_history
                        .as_ref()
                        .ok_or(AlgoError::MissingState { what: "model history" })?;
                    Some(algorithms::ghbm_momentum(
                        history,
                        tau,
                        self.config.local_steps,
                        t,
                    )?)
                }
                None => None,
            },
        };
        let server_control = self.server.control.clone();

        let work = self.run_cohort(&cohort, &theta_prev, round_momentum.as_ref(), server_control.as_ref(), t)?;
        for w in &work {
            self.work_units += w.output.grad_evals;
        }

        let mut new_controls: BTreeMap<usize, ParamVector> = BTreeMap::new();
        let mut results: Vec<CohortResult> = Vec::with_capacity(work.len());
        for w in work {
            let control_delta = match &w.output.new_control {
                Some(new_control) => {
                    let old = match &self.client_states[w.client].control {
                        Some(c) => c.clone(),
                        None => ParamVector::zeros(new_control.dim())?,
                    };
                    let delta = new_control.sub(&old)?;
                    new_controls.insert(w.client, new_control.clone());
                    Some(delta)
                }
                None => None,
            };
            results.push(CohortResult {
                client: w.client,
                final_model: w.output.final_model,
                control_delta,
            });
        }

        let pseudo_grad = algorithms::server_update(
            &self.config.algo,
            &mut self.server,
            &mut results,
            self.config.server_lr,
            self.config.client_lr,
            self.config.local_steps,
            self.config.clients,
        )?;
        self.bytes_cum += self.bytes_per_round;

        let mut first_probe_value: Option<f64> = None;
        if let Some(probe) = self.config.probe.clone() {
            self.window.push(pseudo_grad);
            if self.window.len() > self.window_cap {
                let excess = self.window.len() - self.window_cap;
                self.window.drain(..excess);
            }
            if t % probe.every == 0 {
                let reference = self.reference_direction(
                    &theta_prev,
                    round_momentum.as_ref(),
                    server_control.as_ref(),
                    t,
                )?;
                for &tau in &probe.taus {
                    let used = tau.min(self.window.len());
                    let slice = &self.window[self.window.len() - used..];
                    let measure = metrics::gradient_deviation(slice, &reference)?;
                    if first_probe_value.is_none() {
                        first_probe_value = Some(measure.value);
                    }
                    self.probe_samples.push(DeviationSample {
                        round: t,
                        tau,
                        window: used,
                        value: measure.value,
                        raw: measure.raw,
                    });
                }
            }
        }

        // Commit client state only after the whole round is aggregated.
        for r in &results {
            match &self.config.algo {
                AlgoKind::Scaffold => {
                    if let Some(new_control) = new_controls.remove(&r.client) {
                        self.client_states[r.client].control = Some(new_control);
                    }
                }
                AlgoKind::LocalGhbm { .. } => {
                    algorithms::localghbm_store(&mut self.client_states[r.client], &theta_prev, t);
                }
                AlgoKind::FedHbm { .. } => {
                    algorithms::fedhbm_store(&mut self.client_states[r.client], &r.final_model, t);
                }
                _ => {}
            }
        }

        if t % self.config.eval_every == 0 {
            self.record_round(first_probe_value)?;
        }
        Ok(())
    }

    /// Runs every remaining round.
    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        while self.server.round < self.config.rounds {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_result(self) -> RunResult {
        RunResult {
            config_hash: self.config.hash(),
            seed: self.config.seed,
            rounds: self.config.rounds,
            cohort_size: self.sampler.cohort_size(),
            model_bytes: self.model_bytes,
            bytes_total: self.bytes_cum,
            work_units: self.work_units,
            records: self.records,
            probe_samples: self.probe_samples,
            final_model: self.server.model,
        }
    }

    fn run_cohort(
        &self,
        cohort: &[usize],
        theta_prev: &ParamVector,
        round_momentum: Option<&ParamVector>,
        server_control: Option<&ParamVector>,
        t: u64,
    ) -> Result<Vec<ClientWork>, EngineError> {
        let config = &self.config;
        let task = &self.task;
        let client_data = &self.client_data;
        let client_states = &self.client_states;
        self.pool.install(|| {
            cohort
                .par_iter()
                .map(|&client| {
                    let data = &client_data[client];
                    let mut batch_rng =
                        rng::stream(config.seed, "batch", &[client as u64, t]);
                    let batches = client_batches(
                        data.len(),
                        config.local_steps,
                        config.batch_size,
                        &mut batch_rng,
                    )?;
                    let input = ClientRoundInput {
                        kind: &config.algo,
                        global_model: theta_prev,
                        round: t,
                        local_steps: config.local_steps,
                        client_lr: config.client_lr,
                        weight_decay: config.weight_decay,
                        round_momentum,
                        server_control,
                        state: &client_states[client],
                    };
                    let output = algorithms::client_round(&input, task, data, &batches)?;
                    Ok(ClientWork { client, output })
                })
                .collect::<Result<Vec<ClientWork>, EngineError>>()
        })
    }

    /// The all-clients pseudo-gradient from the same starting point, same
    /// per-client batch draws, and same corrections as the round just run.
    /// Purely observational: no state is touched.
    fn reference_direction(
        &self,
        theta_prev: &ParamVector,
        round_momentum: Option<&ParamVector>,
        server_control: Option<&ParamVector>,
        t: u64,
    ) -> Result<ParamVector, EngineError> {
        let everyone: Vec<usize> = (0..self.config.clients).collect();
        let work = self.run_cohort(&everyone, theta_prev, round_momentum, server_control, t)?;
        let diffs: Vec<ParamVector> = work
            .iter()
            .map(|w| theta_prev.sub(&w.output.final_model))
            .collect::<Result<_, _>>()?;
        Ok(ParamVector::mean(&diffs)?)
    }

    fn record_round(&mut self, deviation: Option<f64>) -> Result<(), EngineError> {
        let train = tasks::evaluate(&self.task, &self.server.model, &self.train_data)?;
        let (test_loss, test_accuracy) = match &self.test_data {
            Some(test) => {
                let e = tasks::evaluate(&self.task, &self.server.model, test)?;
                (Some(e.loss), e.accuracy)
            }
            None => (None, None),
        };
        self.records.push(RoundRecord {
            round: self.server.round,
            train_loss: train.loss,
            test_loss,
            test_accuracy,
            deviation,
            bytes_cum: self.bytes_cum,
        });
        Ok(())
    }
}

fn build_partition(config: &RunConfig, train_data: &Dataset) -> Result<Partition, EngineError> {
    let n = train_data.len();
    let k = config.clients;
    let partition = match &config.partition {
        PartitionSpec::Iid => {
            data::partition_iid(n, k, rng::sub_seed(config.seed, "partition"))?
        }
        PartitionSpec::DomainSplit => data::partition_domain_split(train_data, k)?,
        PartitionSpec::Dirichlet { alpha } => data::partition_dirichlet(
            train_data.class_labels()?,
            k,
            *alpha,
            rng::sub_seed(config.seed, "partition"),
        )?,
    };
    Ok(partition)
}

/// Runs a config end to end.
pub fn run(config: RunConfig) -> Result<RunResult, EngineError> {
    let mut sim = Simulation::new(config)?;
    sim.run_to_end()?;
    Ok(sim.into_result())
}

/// Runs a config end to end on a caller-supplied dataset.
pub fn run_with_dataset(config: RunConfig, dataset: Dataset) -> Result<RunResult, EngineError> {
    let mut sim = Simulation::with_dataset(config, dataset)?;
    sim.run_to_end()?;
    Ok(sim.into_result())
}
