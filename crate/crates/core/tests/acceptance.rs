//! End-to-end acceptance suite. Each test covers one headline guarantee of
//! the simulator and prints a single PASS/FAIL line with the measured
//! margins, so the whole contract can be audited from the test output.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::{Duration, Instant};

use rand::Rng;

use fedsim_core::algorithms::{AlgoKind, ClientRoundInput, ClientState};
use fedsim_core::data::partition_iid;
use fedsim_core::engine::{
    self, rounds_to_target, DataSpec, PartitionSpec, ProbeSpec, RunConfig, RunResult, Simulation,
};
use fedsim_core::metrics::{
    cost_report, coverage_bound_check, gradient_deviation, CostEntry, MetricKind,
};
use fedsim_core::params::ParamVector;
use fedsim_core::report;
use fedsim_core::rng;
use fedsim_core::sampling::{Sampler, SamplerKind};
use fedsim_core::tasks::{self, Dataset, TaskKind};
use fedsim_core::verify;
use fedsim_core::engine::RoundRecord;

/// Prints the audit line and fails the test when `ok` is false or the
/// elapsed time exceeds the budget.
fn report_line(ok: bool, budget: Duration, elapsed: Duration, name: &str, detail: &str) {
    let in_budget = elapsed <= budget;
    let verdict = if ok && in_budget { "PASS" } else { "FAIL" };
    println!(
        "{verdict}  {name}  {detail} [{:.2}s of {:.0}s budget]",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(ok, "{name}: {detail}");
    assert!(
        in_budget,
        "{name}: took {:.2}s, budget {:.0}s",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
}

#[test]
fn a01_momentum_update_forms_agree() {
    let start = Instant::now();
    let classical = verify::check_classical_form();
    let windowed = verify::check_ghbm_form();
    let ok = classical.passed && windowed.passed;
    report_line(
        ok,
        Duration::from_secs(1),
        start.elapsed(),
        "momentum update forms agree",
        &format!("{}; {}", classical.detail, windowed.detail),
    );
}

/// Base config for the reduction identities: a small heterogeneous
/// quadratic federation with mini-batches, so every code path that could
/// break bitwise equality (batching, partitioning, sampling) is exercised.
fn reduction_config(algo: AlgoKind) -> RunConfig {
    RunConfig {
        task: TaskKind::QuadraticRegression,
        data: DataSpec::Quadratic {
            n: 60,
            x_low: -3.0,
            x_high: 3.0,
            a: 1.0,
            b: -2.0,
            c: 0.5,
            noise_std: 0.1,
        },
        partition: PartitionSpec::DomainSplit,
        algo,
        clients: 6,
        sampler: SamplerKind::Uniform,
        participation: 0.5,
        rounds: 12,
        local_steps: 3,
        server_lr: 1.0,
        client_lr: 0.01,
        weight_decay: 0.0,
        batch_size: Some(4),
        eval_every: 1,
        test_fraction: 0.2,
        seed: 11,
        threads: 1,
        probe: None,
    }
}

/// Bitwise equality of the training dynamics. Byte counters are excluded:
/// algorithms with different per-round traffic can still share identical
/// trajectories, which is exactly what the reductions assert.
fn same_dynamics(a: &RunResult, b: &RunResult) -> bool {
    let bits = |x: f64| x.to_bits();
    let opt_bits = |x: Option<f64>| x.map(bits);
    a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(ra, rb)| {
            ra.round == rb.round
                && bits(ra.train_loss) == bits(rb.train_loss)
                && opt_bits(ra.test_loss) == opt_bits(rb.test_loss)
                && opt_bits(ra.test_accuracy) == opt_bits(rb.test_accuracy)
        })
        && a.final_model.bitwise_eq(&b.final_model)
}

fn runs_identical(a: &AlgoKind, b: &AlgoKind) -> bool {
    let ra = engine::run(reduction_config(a.clone())).unwrap();
    let rb = engine::run(reduction_config(b.clone())).unwrap();
    same_dynamics(&ra, &rb)
}

#[test]
fn a02_degenerate_settings_reduce_bitwise() {
    let start = Instant::now();
    let mut failures: Vec<&str> = Vec::new();

    if !runs_identical(
        &AlgoKind::GhbmPractical {
            beta: 0.9,
            tau: 1,
        },
        &AlgoKind::FedCm { beta: 0.9 },
    ) {
        failures.push("window-1 GHBM vs FedCM");
    }
    if !runs_identical(&AlgoKind::FedAvgM { beta: 0.0 }, &AlgoKind::FedAvg) {
        failures.push("FedAvgM(beta=0) vs FedAvg");
    }
    if !runs_identical(&AlgoKind::FedCm { beta: 0.0 }, &AlgoKind::FedAvg) {
        failures.push("FedCM(beta=0) vs FedAvg");
    }
    if !runs_identical(&AlgoKind::FedProx { mu: 0.0 }, &AlgoKind::FedAvg) {
        failures.push("FedProx(mu=0) vs FedAvg");
    }

    // One client, full participation, one local step, unit server rate:
    // the federation must collapse to plain SGD on the whole shard.
    let config = RunConfig {
        task: TaskKind::QuadraticRegression,
        data: DataSpec::Quadratic {
            n: 24,
            x_low: -2.0,
            x_high: 2.0,
            a: 1.5,
            b: -0.5,
            c: 0.25,
            noise_std: 0.0,
        },
        partition: PartitionSpec::Iid,
        algo: AlgoKind::FedAvg,
        clients: 1,
        sampler: SamplerKind::Uniform,
        participation: 1.0,
        rounds: 25,
        local_steps: 1,
        server_lr: 1.0,
        client_lr: 0.05,
        weight_decay: 0.0,
        batch_size: Some(8),
        eval_every: 25,
        test_fraction: 0.0,
        seed: 3,
        threads: 1,
        probe: None,
    };
    let mut sim = Simulation::new(config.clone()).unwrap();
    let dataset = tasks::generate_quadratic_dataset(
        24,
        -2.0,
        2.0,
        (1.5, -0.5, 0.25),
        0.0,
        rng::sub_seed(3, "data"),
    )
    .unwrap();
    let (train_idx, _) = engine::train_test_split(24, 0.0, 3);
    let train = dataset.subset(&train_idx).unwrap();
    let shards = partition_iid(train.len(), 1, rng::sub_seed(3, "partition")).unwrap();
    let shard = train.subset(shards.client(0)).unwrap();
    let mut theta = config.task.init_params(3).unwrap();
    let mut sgd_matches = true;
    for t in 1..=25u64 {
        let mut batch_rng = rng::stream(3, "batch", &[0, t]);
        let batches = engine::client_batches(shard.len(), 1, Some(8), &mut batch_rng).unwrap();
        let g = tasks::grad(&config.task, &theta, &shard, tasks::Batch::new(&batches[0])).unwrap();
        for k in 0..theta.dim() {
            theta[k] -= 0.05 * g[k];
        }
        sim.step().unwrap();
        if !sim.model().bitwise_eq(&theta) {
            sgd_matches = false;
            break;
        }
    }
    if !sgd_matches {
        failures.push("single-client federation vs plain SGD");
    }

    report_line(
        failures.is_empty(),
        Duration::from_secs(5),
        start.elapsed(),
        "degenerate settings reduce bitwise",
        &if failures.is_empty() {
            "4 algorithm reductions and the single-client SGD collapse are bit-identical"
                .to_string()
        } else {
            format!("mismatch in: {}", failures.join(", "))
        },
    );
}

#[test]
fn a03_full_coverage_window_has_zero_deviation() {
    let start = Instant::now();
    let clients = 10usize;
    let participation = 0.2f64;
    let task = TaskKind::LogisticRegression {
        classes: 3,
        input_dim: 2,
    };
    let data = tasks::generate_synthetic_classification(80, 2, 3, 1.2, 901).unwrap();
    let shards = partition_iid(data.len(), clients, 902).unwrap();
    let client_data: Vec<Dataset> = shards
        .iter()
        .map(|idx| data.subset(idx))
        .collect::<Result<_, _>>()
        .unwrap();
    let mut r = rng::stream(903, "zero-deviation", &[]);
    let theta =
        ParamVector::new((0..task.param_dim()).map(|_| r.random_range(-0.5..0.5)).collect())
            .unwrap();

    let kind = AlgoKind::FedAvg;
    let state = ClientState::default();
    let one_round = |client: usize| -> ParamVector {
        let shard = &client_data[client];
        let batch: Vec<usize> = (0..shard.len()).collect();
        let input = ClientRoundInput {
            kind: &kind,
            global_model: &theta,
            round: 1,
            local_steps: 1,
            client_lr: 0.05,
            weight_decay: 0.0,
            round_momentum: None,
            server_control: None,
            state: &state,
        };
        let out = fedsim_core::algorithms::client_round(&input, &task, shard, &[batch]).unwrap();
        theta.sub(&out.final_model).unwrap()
    };

    // A cyclic schedule with window 1/C visits every client exactly once,
    // so the window average must equal the all-clients reference exactly.
    let sampler = Sampler::new(SamplerKind::Cyclic, clients, participation, 904).unwrap();
    let period = sampler.period();
    let mut window = Vec::with_capacity(period);
    for t in 1..=period as u64 {
        let cohort = sampler.sample(t).unwrap();
        let grads: Vec<ParamVector> = cohort.iter().map(|&c| one_round(c)).collect();
        window.push(ParamVector::mean(&grads).unwrap());
    }
    let all: Vec<ParamVector> = (0..clients).map(&one_round).collect();
    let reference = ParamVector::mean(&all).unwrap();
    let measure = gradient_deviation(&window, &reference).unwrap();

    report_line(
        measure.value < 1e-10,
        Duration::from_secs(5),
        start.elapsed(),
        "full coverage window has zero deviation",
        &format!("relative deviation {:.3e} < 1e-10", measure.value),
    );
}

#[test]
fn a04_coverage_bound_holds_on_random_instances() {
    let start = Instant::now();
    let mut r = rng::stream(2024, "coverage-instances", &[]);
    let mut checks = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut violated = 0usize;
    for _ in 0..100 {
        let clients = r.random_range(2..=20usize);
        let divisors: Vec<usize> = (1..=clients).filter(|m| clients % m == 0).collect();
        let cohort = divisors[r.random_range(0..divisors.len())];
        let participation = cohort as f64 / clients as f64;
        let dim = r.random_range(2..=6usize);
        let grads: Vec<ParamVector> = (0..clients)
            .map(|_| {
                ParamVector::new((0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
            })
            .collect();
        let max_window = clients / cohort;
        for tau in 1..=max_window {
            for kind in [SamplerKind::Uniform, SamplerKind::Cyclic] {
                let outcome =
                    coverage_bound_check(&grads, tau, kind, participation, 40, r.random())
                        .unwrap();
                checks += 1;
                min_slack = min_slack.min(outcome.rhs - outcome.lhs);
                if !outcome.holds() {
                    violated += 1;
                }
            }
        }
    }
    report_line(
        violated == 0,
        Duration::from_secs(60),
        start.elapsed(),
        "coverage bound holds on random instances",
        &format!("100 instances, {checks} checks, {violated} violations, min slack {min_slack:.3e}"),
    );
}

fn interpolation_config(algo: AlgoKind, participation: f64, seed: u64) -> RunConfig {
    RunConfig {
        task: TaskKind::QuadraticRegression,
        data: DataSpec::Quadratic {
            n: 200,
            x_low: -10.0,
            x_high: 10.0,
            a: 10.0,
            b: 5.0,
            c: -1.0,
            noise_std: 0.0,
        },
        partition: PartitionSpec::DomainSplit,
        algo,
        clients: 10,
        sampler: SamplerKind::Cyclic,
        participation,
        rounds: 6000,
        local_steps: 2,
        server_lr: 1.0,
        client_lr: 6e-5,
        weight_decay: 0.0,
        batch_size: None,
        eval_every: 6000,
        test_fraction: 0.0,
        seed,
        threads: 1,
        probe: None,
    }
}

fn mean_final_train_loss(configs: impl Iterator<Item = RunConfig>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for config in configs {
        let result = engine::run(config).unwrap();
        sum += result.records.last().unwrap().train_loss;
        count += 1;
    }
    sum / count as f64
}

#[test]
fn a05_windowed_momentum_matches_full_participation_quality() {
    let start = Instant::now();
    let seeds = 0..5u64;
    let ghbm_partial = mean_final_train_loss(seeds.clone().map(|s| {
        interpolation_config(AlgoKind::GhbmPractical { beta: 0.9, tau: 5 }, 0.2, s)
    }));
    let fedcm_full = mean_final_train_loss(
        seeds
            .clone()
            .map(|s| interpolation_config(AlgoKind::FedCm { beta: 0.9 }, 1.0, s)),
    );
    let fedcm_partial = mean_final_train_loss(
        seeds.map(|s| interpolation_config(AlgoKind::FedCm { beta: 0.9 }, 0.2, s)),
    );

    let tracks_full = ghbm_partial.is_finite()
        && fedcm_full.is_finite()
        && ghbm_partial <= 1.2 * fedcm_full;
    let classical_breaks = !fedcm_partial.is_nan() && fedcm_partial >= 2.0 * fedcm_full;
    report_line(
        tracks_full && classical_breaks,
        Duration::from_secs(30),
        start.elapsed(),
        "windowed momentum matches full participation quality",
        &format!(
            "GHBM(tau=5)/FedCM(full) = {:.3} <= 1.2; FedCM(partial)/FedCM(full) = {:.3e} >= 2",
            ghbm_partial / fedcm_full,
            fedcm_partial / fedcm_full
        ),
    );
}

fn singleton_class_config(algo: AlgoKind, seed: u64) -> RunConfig {
    RunConfig {
        task: TaskKind::LogisticRegression {
            classes: 50,
            input_dim: 16,
        },
        data: DataSpec::Blobs {
            n: 3000,
            cluster_spread: 0.8,
        },
        partition: PartitionSpec::Dirichlet { alpha: 0.0 },
        algo,
        clients: 50,
        sampler: SamplerKind::Uniform,
        participation: 0.2,
        rounds: 250,
        local_steps: 4,
        server_lr: 1.0,
        client_lr: 0.03,
        weight_decay: 0.0,
        batch_size: Some(8),
        eval_every: 250,
        test_fraction: 0.2,
        seed,
        threads: 4,
        probe: None,
    }
}

fn mean_final_test_accuracy(configs: impl Iterator<Item = RunConfig>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for config in configs {
        let result = engine::run(config).unwrap();
        sum += result.records.last().unwrap().test_accuracy.unwrap();
        count += 1;
    }
    sum / count as f64
}

#[test]
fn a06_window_of_one_over_c_beats_smaller_windows() {
    let start = Instant::now();
    let seeds = 0..5u64;
    let acc_window5 = mean_final_test_accuracy(seeds.clone().map(|s| {
        singleton_class_config(AlgoKind::GhbmPractical { beta: 0.99, tau: 5 }, s)
    }));
    let acc_window1 = mean_final_test_accuracy(seeds.clone().map(|s| {
        singleton_class_config(AlgoKind::GhbmPractical { beta: 0.99, tau: 1 }, s)
    }));
    let acc_plain =
        mean_final_test_accuracy(seeds.map(|s| singleton_class_config(AlgoKind::FedAvg, s)));

    report_line(
        acc_window5 > acc_window1 && acc_window5 > acc_plain,
        Duration::from_secs(120),
        start.elapsed(),
        "window of 1/C beats smaller windows",
        &format!(
            "mean final test accuracy: tau=5 {acc_window5:.4} > tau=1 {acc_window1:.4} and > FedAvg {acc_plain:.4}"
        ),
    );
}

fn probe_config(partition: PartitionSpec, seed: u64) -> RunConfig {
    RunConfig {
        task: TaskKind::LogisticRegression {
            classes: 5,
            input_dim: 6,
        },
        data: DataSpec::Blobs {
            n: 500,
            cluster_spread: 1.0,
        },
        partition,
        algo: AlgoKind::FedAvg,
        clients: 10,
        sampler: SamplerKind::Uniform,
        participation: 0.2,
        rounds: 30,
        local_steps: 1,
        server_lr: 1.0,
        client_lr: 0.05,
        weight_decay: 0.0,
        batch_size: None,
        eval_every: 30,
        test_fraction: 0.2,
        seed,
        threads: 1,
        probe: Some(ProbeSpec {
            taus: vec![1, 5],
            every: 1,
        }),
    }
}

/// Mean probe value over rounds where the window already holds `tau`
/// entries, so every sample averages the same number of cohorts.
fn probe_mean(result: &RunResult, tau: usize) -> f64 {
    let values: Vec<f64> = result
        .probe_samples
        .iter()
        .filter(|s| s.tau == tau && s.window == tau)
        .map(|s| s.value)
        .collect();
    assert!(!values.is_empty(), "no full-window probe samples for tau={tau}");
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn a07_deviation_probe_separates_pathological_split() {
    let start = Instant::now();
    let mut strict_per_seed = true;
    let mut path1 = 0.0;
    let mut path5 = 0.0;
    let mut iid1 = 0.0;
    let mut iid5 = 0.0;
    for seed in 0..5u64 {
        let path = engine::run(probe_config(PartitionSpec::Dirichlet { alpha: 0.0 }, seed)).unwrap();
        let iid = engine::run(probe_config(PartitionSpec::Iid, seed)).unwrap();
        let (p1, p5) = (probe_mean(&path, 1), probe_mean(&path, 5));
        let (i1, i5) = (probe_mean(&iid, 1), probe_mean(&iid, 5));
        strict_per_seed &= p1 > p5;
        path1 += p1 / 5.0;
        path5 += p5 / 5.0;
        iid1 += i1 / 5.0;
        iid5 += i5 / 5.0;
    }
    let pathological_separates = strict_per_seed && path1 > path5;
    let iid_is_flat = iid1 <= 10.0 * iid5;
    report_line(
        pathological_separates && iid_is_flat,
        Duration::from_secs(120),
        start.elapsed(),
        "deviation probe separates pathological split",
        &format!(
            "pathological tau=1/tau=5 = {:.2} (strict on every seed); iid ratio {:.2} <= 10",
            path1 / path5,
            iid1 / iid5
        ),
    );
}

fn synthetic_result(losses: &[f64]) -> RunResult {
    let records: Vec<RoundRecord> = losses
        .iter()
        .enumerate()
        .map(|(i, &l)| RoundRecord {
            round: i as u64,
            train_loss: l,
            test_loss: None,
            test_accuracy: None,
            deviation: None,
            bytes_cum: 0,
        })
        .collect();
    RunResult {
        config_hash: 0,
        seed: 0,
        rounds: (losses.len() - 1) as u64,
        cohort_size: 2,
        model_bytes: 80,
        bytes_total: 0,
        work_units: 0,
        records,
        probe_samples: Vec::new(),
        final_model: ParamVector::zeros(1).unwrap(),
    }
}

#[test]
fn a08_cost_ledger_matches_hand_computation() {
    let start = Instant::now();
    let rounds = 32u64;

    // Three loss curves with known target crossings: plain averaging gets
    // there on the last round, the windowed method four times sooner, and
    // the control-variate method never.
    let plain: Vec<f64> = (0..=rounds).map(|t| 1.0 - t as f64 / 64.0).collect();
    let windowed: Vec<f64> = (0..=rounds).map(|t| 1.0 - t as f64 / 32.0).collect();
    let flat: Vec<f64> = (0..=rounds).map(|_| 1.0).collect();

    let plain_result = synthetic_result(&plain);
    let windowed_result = synthetic_result(&windowed);
    let flat_result = synthetic_result(&flat);
    assert_eq!(
        rounds_to_target(&plain_result, MetricKind::TrainLoss, 0.5),
        Some(32)
    );
    assert_eq!(
        rounds_to_target(&windowed_result, MetricKind::TrainLoss, 0.75),
        Some(8)
    );
    assert_eq!(
        rounds_to_target(&flat_result, MetricKind::TrainLoss, 0.5),
        None
    );

    let fed_avg = AlgoKind::FedAvg;
    let ghbm = AlgoKind::GhbmPractical { beta: 0.9, tau: 5 };
    let scaffold = AlgoKind::Scaffold;
    let entries = vec![
        CostEntry {
            algorithm: fed_avg.name().to_string(),
            overhead: fed_avg.comm_overhead(),
            model_bytes: 80,
            cohort_size: 2,
            rounds_total: rounds,
            rounds_to_target: rounds_to_target(&plain_result, MetricKind::TrainLoss, 0.5),
        },
        CostEntry {
            algorithm: ghbm.name().to_string(),
            overhead: ghbm.comm_overhead(),
            model_bytes: 80,
            cohort_size: 2,
            rounds_total: rounds,
            rounds_to_target: rounds_to_target(&windowed_result, MetricKind::TrainLoss, 0.75),
        },
        CostEntry {
            algorithm: scaffold.name().to_string(),
            overhead: scaffold.comm_overhead(),
            model_bytes: 80,
            cohort_size: 2,
            rounds_total: rounds,
            rounds_to_target: rounds_to_target(&flat_result, MetricKind::TrainLoss, 0.5),
        },
    ];
    let ledger = cost_report(&entries, "FedAvg").unwrap();
    let row = |name: &str| ledger.rows.iter().find(|r| r.algorithm == name).unwrap();

    // Hand computation: bytes = overhead * 2 * 80 * 2 * 32.
    let fa = row("FedAvg");
    let gh = row("GhbmPractical");
    let sc = row("Scaffold");
    let exact = fa.overhead == 1.0
        && fa.total_bytes == 10_240
        && fa.target_fraction == 1.0
        && fa.bytes_to_target == 10_240.0
        && fa.reduction_vs_baseline == 0.0
        && gh.overhead == 1.5
        && gh.total_bytes == 15_360
        && gh.rounds_to_target == 8
        && gh.target_fraction == 0.25
        && gh.bytes_to_target == 3_840.0
        && gh.reduction_vs_baseline == 0.625
        && sc.overhead == 2.0
        && sc.total_bytes == 20_480
        && sc.rounds_to_target == 32
        && sc.target_fraction == 1.0
        && sc.bytes_to_target == 20_480.0
        && sc.reduction_vs_baseline == -1.0;

    report_line(
        exact,
        Duration::from_secs(1),
        start.elapsed(),
        "cost ledger matches hand computation",
        &format!(
            "FedAvg {}B, GHBM {}B to target ({:+.1}%), SCAFFOLD {}B ({:+.1}%)",
            fa.total_bytes,
            gh.bytes_to_target,
            100.0 * gh.reduction_vs_baseline,
            sc.bytes_to_target,
            100.0 * sc.reduction_vs_baseline
        ),
    );
}

#[test]
fn a09_analytic_gradients_match_finite_differences() {
    let start = Instant::now();
    let outcome = verify::check_gradients();
    report_line(
        outcome.passed,
        Duration::from_secs(5),
        start.elapsed(),
        "analytic gradients match finite differences",
        &outcome.detail,
    );
}

fn determinism_config(threads: usize) -> RunConfig {
    RunConfig {
        task: TaskKind::LogisticRegression {
            classes: 4,
            input_dim: 5,
        },
        data: DataSpec::Blobs {
            n: 400,
            cluster_spread: 1.0,
        },
        partition: PartitionSpec::Dirichlet { alpha: 0.5 },
        algo: AlgoKind::GhbmPractical { beta: 0.9, tau: 3 },
        clients: 10,
        sampler: SamplerKind::Uniform,
        participation: 0.4,
        rounds: 20,
        local_steps: 2,
        server_lr: 1.0,
        client_lr: 0.05,
        weight_decay: 1e-4,
        batch_size: Some(8),
        eval_every: 1,
        test_fraction: 0.2,
        seed: 7,
        threads,
        probe: Some(ProbeSpec {
            taus: vec![2],
            every: 1,
        }),
    }
}

#[test]
fn a10_same_seed_runs_are_bitwise_identical() {
    let start = Instant::now();
    let first = engine::run(determinism_config(1)).unwrap();
    let second = engine::run(determinism_config(1)).unwrap();
    let pooled = engine::run(determinism_config(8)).unwrap();

    let csv = |r: &RunResult| {
        (
            report::records_csv(&r.records),
            report::deviation_csv(&r.probe_samples),
        )
    };
    let (rec1, dev1) = csv(&first);
    let rerun_identical = {
        let (rec2, dev2) = csv(&second);
        rec1 == rec2 && dev1 == dev2 && first.final_model.bitwise_eq(&second.final_model)
    };
    let pool_size_invariant = {
        let (rec8, dev8) = csv(&pooled);
        rec1 == rec8 && dev1 == dev8 && first.final_model.bitwise_eq(&pooled.final_model)
    };

    report_line(
        rerun_identical && pool_size_invariant,
        Duration::from_secs(30),
        start.elapsed(),
        "same seed runs are bitwise identical",
        &format!(
            "rerun identical: {rerun_identical}; 1-thread vs 8-thread identical: {pool_size_invariant}"
        ),
    );
}
