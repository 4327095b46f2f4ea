//! Self-checks for the numerical core: two independently coded momentum
//! formulations compared step by step, analytic gradients against finite
//! differences, sampler structure, the zero-deviation window identity, and
//! the coverage bound on random instances.
//!
//! Every check reports an outcome instead of panicking, so a front end can
//! run them all and summarize.

use crate::algorithms::{client_round, AlgoKind, ClientRoundInput, ClientState};
use crate::metrics::{self, gradient_deviation};
use crate::params::ParamVector;
use crate::rng;
use crate::sampling::{cohort_size, Sampler, SamplerKind};
use crate::tasks::{self, Batch, Dataset, TaskKind};
use rand::Rng;

const FORM_TOL: f64 = 1e-9;
const GRAD_TOL: f64 = 1e-5;
const ZERO_DEV_TOL: f64 = 1e-10;
const FORM_STEPS: usize = 20;

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from_result(name: &'static str, result: Result<String, String>) -> Self {
        match result {
            Ok(detail) => Self {
                name,
                passed: true,
                detail,
            },
            Err(detail) => Self {
                name,
                passed: false,
                detail,
            },
        }
    }
}

/// Runs every check.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_classical_form(),
        check_ghbm_form(),
        check_gradients(),
        check_sampler(),
        check_zero_deviation(),
        check_coverage_bound(),
    ]
}

fn synthetic_gradients(dim: usize, steps: usize, seed: u64) -> Vec<ParamVector> {
    let mut r = rng::stream(seed, "form-check", &[]);
    (0..steps)
        .map(|_| {
            ParamVector::new((0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
                .expect("non-empty")
        })
        .collect()
}

fn max_relative_gap(a: &[ParamVector], b: &[ParamVector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let diff = x.sub(y).expect("same dim").norm_sq().sqrt();
            diff / y.norm_sq().sqrt().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Moving-average route: m^t = β·m^{t-1} + g^t, θ^t = θ^{t-1} − η·m^t.
fn classical_momentum_route(
    gradients: &[ParamVector],
    beta: f64,
    eta: f64,
    theta0: &ParamVector,
) -> Vec<ParamVector> {
    let mut theta = theta0.clone();
    let mut m = ParamVector::zeros(theta0.dim()).expect("dim > 0");
    let mut out = Vec::with_capacity(gradients.len());
    for g in gradients {
        m.scale(beta);
        m.axpy(1.0, g).expect("same dim");
        theta.axpy(-eta, &m).expect("same dim");
        out.push(theta.clone());
    }
    out
}

/// Displacement route: θ^t = θ^{t-1} + β(θ^{t-1} − θ^{t-2}) − η·g^t, with
/// θ^k = θ^0 for k ≤ 0. `beta_sign` lets a test inject a sign fault.
fn classical_displacement_route(
    gradients: &[ParamVector],
    beta: f64,
    eta: f64,
    theta0: &ParamVector,
    beta_sign: f64,
) -> Vec<ParamVector> {
    let mut prev = theta0.clone();
    let mut curr = theta0.clone();
    let mut out = Vec::with_capacity(gradients.len());
    for g in gradients {
        let mut next = curr.clone();
        let momentum = curr.sub(&prev).expect("same dim");
        next.axpy(beta_sign * beta, &momentum).expect("same dim");
        next.axpy(-eta, g).expect("same dim");
        prev = curr;
        curr = next;
        out.push(curr.clone());
    }
    out
}

/// Averaged-window route: m^t = (1/τ)·Σ_{k=1..τ} β·m^{t-k} + g^t with
/// m^k = 0 for k ≤ 0, θ^t = θ^{t-1} − η·m^t.
fn ghbm_recursive_route(
    gradients: &[ParamVector],
    beta: f64,
    tau: usize,
    eta: f64,
    theta0: &ParamVector,
) -> Vec<ParamVector> {
    let dim = theta0.dim();
    let mut past_m: Vec<ParamVector> = Vec::new();
    let mut theta = theta0.clone();
    let mut out = Vec::with_capacity(gradients.len());
    for g in gradients {
        let mut m = ParamVector::zeros(dim).expect("dim > 0");
        for k in 1..=tau {
            if k <= past_m.len() {
                m.axpy(beta / tau as f64, &past_m[past_m.len() - k])
                    .expect("same dim");
            }
        }
        m.axpy(1.0, g).expect("same dim");
        theta.axpy(-eta, &m).expect("same dim");
        past_m.push(m);
        out.push(theta.clone());
    }
    out
}

/// Window-displacement route: θ^t = θ^{t-1} − η·g^t + (β/τ)(θ^{t-1} −
/// θ^{t-τ-1}) with θ^k = θ^0 for k ≤ 0. `beta_sign` injects a sign fault.
fn ghbm_displacement_route(
    gradients: &[ParamVector],
    beta: f64,
    tau: usize,
    eta: f64,
    theta0: &ParamVector,
    beta_sign: f64,
) -> Vec<ParamVector> {
    // thetas[j] holds θ^{j}; index 0 is θ^0, older values are padded to θ^0.
    let mut thetas = vec![theta0.clone()];
    let mut out = Vec::with_capacity(gradients.len());
    for (i, g) in gradients.iter().enumerate() {
        let t = i + 1;
        let curr = thetas[t - 1].clone();
        let past = &thetas[t.saturating_sub(tau + 1)];
        let momentum = curr.sub(past).expect("same dim");
        let mut next = curr;
        next.axpy(-eta, g).expect("same dim");
        next.axpy(beta_sign * beta / tau as f64, &momentum)
            .expect("same dim");
        thetas.push(next.clone());
        out.push(next);
    }
    out
}

/// Momentum as running average against momentum as one-step displacement.
pub fn check_classical_form() -> CheckOutcome {
    let theta0 = ParamVector::new(vec![0.8, -0.3, 0.1]).expect("non-empty");
    let gradients = synthetic_gradients(3, FORM_STEPS, 101);
    let mut worst = 0.0f64;
    for &beta in &[0.0, 0.5, 0.9] {
        let a = classical_momentum_route(&gradients, beta, 0.3, &theta0);
        let b = classical_displacement_route(&gradients, beta, 0.3, &theta0, 1.0);
        worst = worst.max(max_relative_gap(&a, &b));
    }
    CheckOutcome::from_result(
        "classical-form-equivalence",
        if worst < FORM_TOL {
            Ok(format!("max relative gap {worst:.3e} over {FORM_STEPS} steps"))
        } else {
            Err(format!("routes disagree: max relative gap {worst:.3e}"))
        },
    )
}

/// τ-averaged momentum recursion against the τ-round displacement form.
pub fn check_ghbm_form() -> CheckOutcome {
    let theta0 = ParamVector::new(vec![-0.2, 0.6, 1.1, 0.0]).expect("non-empty");
    let gradients = synthetic_gradients(4, FORM_STEPS, 202);
    let mut worst = 0.0f64;
    for &tau in &[1usize, 2, 5] {
        for &beta in &[0.4, 0.9] {
            let a = ghbm_recursive_route(&gradients, beta, tau, 0.25, &theta0);
            let b = ghbm_displacement_route(&gradients, beta, tau, 0.25, &theta0, 1.0);
            worst = worst.max(max_relative_gap(&a, &b));
        }
    }
    CheckOutcome::from_result(
        "ghbm-form-equivalence",
        if worst < FORM_TOL {
            Ok(format!(
                "max relative gap {worst:.3e} over {FORM_STEPS} steps, windows 1/2/5"
            ))
        } else {
            Err(format!("routes disagree: max relative gap {worst:.3e}"))
        },
    )
}

fn gradcheck_task(task: &TaskKind, data: &Dataset, draws: usize, seed: u64) -> Result<f64, String> {
    let dim = task.param_dim();
    let mut r = rng::stream(seed, "gradcheck", &[]);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let theta = ParamVector::new((0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
            .map_err(|e| e.to_string())?;
        let count = r.random_range(1..=data.len());
        let mut indices: Vec<usize> = (0..data.len()).collect();
        for i in 0..count {
            let j = r.random_range(i..data.len());
            indices.swap(i, j);
        }
        let batch_idx = &indices[..count];
        let g = tasks::grad(task, &theta, data, Batch::new(batch_idx)).map_err(|e| e.to_string())?;
        let fd = tasks::finite_diff_grad(task, &theta, data, Batch::new(batch_idx), 1e-5)
            .map_err(|e| e.to_string())?;
        for k in 0..dim {
            let denom = g[k].abs().max(fd[k].abs()).max(1e-6);
            worst = worst.max((g[k] - fd[k]).abs() / denom);
        }
    }
    Ok(worst)
}

/// Analytic gradients against central finite differences, all task kinds.
pub fn check_gradients() -> CheckOutcome {
    let run = || -> Result<String, String> {
        let quad = tasks::generate_quadratic_dataset(12, -2.0, 2.0, (1.5, -0.5, 0.25), 0.1, 31)
            .map_err(|e| e.to_string())?;
        let blobs = tasks::generate_synthetic_classification(24, 2, 3, 1.0, 32)
            .map_err(|e| e.to_string())?;
        let cases = [
            (TaskKind::QuadraticRegression, &quad),
            (
                TaskKind::LogisticRegression {
                    classes: 3,
                    input_dim: 2,
                },
                &blobs,
            ),
            (
                TaskKind::Mlp {
                    input_dim: 2,
                    hidden: 4,
                    classes: 3,
                },
                &blobs,
            ),
        ];
        let mut worst = 0.0f64;
        for (i, (task, data)) in cases.iter().enumerate() {
            worst = worst.max(gradcheck_task(task, data, 50, 40 + i as u64)?);
        }
        if worst < GRAD_TOL {
            Ok(format!("max relative error {worst:.3e} over 50 draws per task"))
        } else {
            Err(format!("gradient mismatch: max relative error {worst:.3e}"))
        }
    };
    CheckOutcome::from_result("gradient-check", run())
}

/// Cohort sizing, cyclic periodicity and coverage, uniform sanity.
pub fn check_sampler() -> CheckOutcome {
    let run = || -> Result<String, String> {
        for (k, c, want) in [(10, 0.2, 2usize), (5, 0.6, 3), (4, 0.1, 1), (9, 1.0 / 3.0, 3)] {
            let got = cohort_size(k, c);
            if got != want {
                return Err(format!("cohort_size({k}, {c}) = {got}, want {want}"));
            }
        }
        let cyc = Sampler::new(SamplerKind::Cyclic, 12, 0.25, 5).map_err(|e| e.to_string())?;
        let period = cyc.period();
        if period != 4 {
            return Err(format!("cyclic period {period}, want 4"));
        }
        for t in 1..=12u64 {
            let a = cyc.sample(t).map_err(|e| e.to_string())?;
            let b = cyc.sample(t + period as u64).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("cyclic cohort changed between rounds {t} and {}", t + period as u64));
            }
        }
        let mut seen: Vec<usize> = Vec::new();
        for t in 1..=period as u64 {
            seen.extend(cyc.sample(t).map_err(|e| e.to_string())?);
        }
        seen.sort_unstable();
        if seen != (0..12).collect::<Vec<_>>() {
            return Err("one cyclic period does not cover every client exactly once".to_string());
        }
        let uni = Sampler::new(SamplerKind::Uniform, 10, 0.3, 6).map_err(|e| e.to_string())?;
        for t in 1..=20u64 {
            let s = uni.sample(t).map_err(|e| e.to_string())?;
            let mut d = s.clone();
            d.dedup();
            if s.len() != 3 || d.len() != 3 || s.iter().any(|&i| i >= 10) {
                return Err(format!("uniform cohort malformed at round {t}: {s:?}"));
            }
        }
        Ok("cohort sizes, cyclic period/coverage, uniform draws all consistent".to_string())
    };
    CheckOutcome::from_result("sampler-invariants", run())
}

/// With cyclic cohorts, one full local step per round, and a frozen model,
/// the average of one period's pseudo-gradients equals the all-clients
/// pseudo-gradient up to summation order.
pub fn check_zero_deviation() -> CheckOutcome {
    let run = || -> Result<String, String> {
        let clients = 10usize;
        let participation = 0.2f64;
        let task = TaskKind::LogisticRegression {
            classes: 3,
            input_dim: 2,
        };
        let data = tasks::generate_synthetic_classification(60, 2, 3, 1.5, 77)
            .map_err(|e| e.to_string())?;
        let shards = crate::data::partition_iid(data.len(), clients, 78).map_err(|e| e.to_string())?;
        let client_data: Vec<Dataset> = shards
            .iter()
            .map(|idx| data.subset(idx))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mut r = rng::stream(79, "zero-deviation", &[]);
        let dim = task.param_dim();
        let theta = ParamVector::new((0..dim).map(|_| r.random_range(-0.5..0.5)).collect())
            .map_err(|e| e.to_string())?;

        let kind = AlgoKind::FedAvg;
        let state = ClientState::default();
        let one_round = |client: usize| -> Result<ParamVector, String> {
            let shard = &client_data[client];
            let batch: Vec<usize> = (0..shard.len()).collect();
            let input = ClientRoundInput {
                kind: &kind,
                global_model: &theta,
                round: 1,
                local_steps: 1,
                client_lr: 0.3,
                weight_decay: 0.0,
                round_momentum: None,
                server_control: None,
                state: &state,
            };
            let out = client_round(&input, &task, shard, &[batch]).map_err(|e| e.to_string())?;
            theta.sub(&out.final_model).map_err(|e| e.to_string())
        };

        let sampler = Sampler::new(SamplerKind::Cyclic, clients, participation, 80)
            .map_err(|e| e.to_string())?;
        let period = sampler.period() as u64;
        let mut window = Vec::new();
        for t in 1..=period {
            let cohort = sampler.sample(t).map_err(|e| e.to_string())?;
            let diffs: Vec<ParamVector> = cohort
                .iter()
                .map(|&i| one_round(i))
                .collect::<Result<_, _>>()?;
            window.push(ParamVector::mean(&diffs).map_err(|e| e.to_string())?);
        }
        let all: Vec<ParamVector> = (0..clients)
            .map(one_round)
            .collect::<Result<_, _>>()?;
        let reference = ParamVector::mean(&all).map_err(|e| e.to_string())?;
        let measure = gradient_deviation(&window, &reference).map_err(|e| e.to_string())?;
        if measure.value < ZERO_DEV_TOL {
            Ok(format!("relative deviation {:.3e} over one full period", measure.value))
        } else {
            Err(format!(
                "full-period window deviates from the all-clients direction: {:.3e}",
                measure.value
            ))
        }
    };
    CheckOutcome::from_result("zero-deviation-window", run())
}

/// Coverage bound on 100 random instances: every window length up to the
/// participation period, both samplers.
pub fn check_coverage_bound() -> CheckOutcome {
    let run = || -> Result<String, String> {
        let mut r = rng::stream(900, "coverage-instances", &[]);
        let mut worst_margin = f64::INFINITY;
        for instance in 0..100u64 {
            let clients = r.random_range(2..=20usize);
            let divisors: Vec<usize> = (1..=clients).filter(|m| clients % m == 0).collect();
            let m = divisors[r.random_range(0..divisors.len())];
            let participation = m as f64 / clients as f64;
            let dim = r.random_range(1..=4usize);
            let grads: Vec<ParamVector> = (0..clients)
                .map(|_| {
                    ParamVector::new((0..dim).map(|_| r.random_range(-2.0..2.0)).collect())
                        .expect("non-empty")
                })
                .collect();
            let max_tau = clients / m;
            for tau in 1..=max_tau {
                for kind in [SamplerKind::Uniform, SamplerKind::Cyclic] {
                    let out = metrics::coverage_bound_check(
                        &grads,
                        tau,
                        kind,
                        participation,
                        40,
                        1000 + instance,
                    )
                    .map_err(|e| e.to_string())?;
                    if !out.holds() {
                        return Err(format!(
                            "bound violated on instance {instance} ({kind:?}, K={clients}, m={m}, tau={tau}): lhs {:.6e} > rhs {:.6e}",
                            out.lhs, out.rhs
                        ));
                    }
                    worst_margin = worst_margin.min(out.rhs - out.lhs);
                }
            }
        }
        Ok(format!(
            "bound held on 100 instances, smallest slack {worst_margin:.3e}"
        ))
    };
    CheckOutcome::from_result("coverage-bound", run())
}
