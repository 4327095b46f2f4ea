//! Partitioners: split a dataset across K simulated clients with
//! controllable heterogeneity.
//!
//! Three schemes are provided. `partition_iid` shuffles and deals equal
//! blocks. `partition_domain_split` sorts by the scalar feature and hands
//! out contiguous blocks of the input domain. `partition_dirichlet` draws a
//! per-client class distribution q_i ~ Dirichlet(alpha * p) with uniform
//! prior p and fills each client's quota by sampling classes from q_i
//! without replacement from the global pool; alpha -> 0 degenerates to
//! one class per client, large alpha approaches iid.

use crate::rng;
use crate::tasks::Dataset;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("cannot split {n} samples across {k} clients (every client needs at least one)")]
    Infeasible { k: usize, n: usize },
    #[error("client count must be at least 1")]
    ZeroClients,
    #[error("dirichlet concentration must be non-negative, got {alpha}")]
    NegativeAlpha { alpha: f64 },
    #[error("labels must be non-empty")]
    EmptyLabels,
    #[error("partition invariant violated: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(String),
}

/// Disjoint per-client index lists covering a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    client_indices: Vec<Vec<usize>>,
}

impl Partition {
    /// Wraps index lists after checking the partition invariants against a
    /// dataset of `n` samples.
    pub fn new(client_indices: Vec<Vec<usize>>, n: usize) -> Result<Self, PartitionError> {
        let p = Self { client_indices };
        p.validate(n)?;
        Ok(p)
    }

    pub fn clients(&self) -> usize {
        self.client_indices.len()
    }

    pub fn client(&self, i: usize) -> &[usize] {
        &self.client_indices[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.client_indices.iter().map(|v| v.as_slice())
    }

    /// Checks disjointness, exact coverage of 0..n, and minimum size 1.
    pub fn validate(&self, n: usize) -> Result<(), PartitionError> {
        if self.client_indices.is_empty() {
            return Err(PartitionError::ZeroClients);
        }
        let mut seen = vec![false; n];
        let mut total = 0usize;
        for (client, indices) in self.client_indices.iter().enumerate() {
            if indices.is_empty() {
                return Err(PartitionError::Invalid(format!("client {client} is empty")));
            }
            for &i in indices {
                if i >= n {
                    return Err(PartitionError::Invalid(format!(
                        "client {client} holds out-of-range index {i} (n={n})"
                    )));
                }
                if seen[i] {
                    return Err(PartitionError::Invalid(format!(
                        "index {i} assigned to more than one client"
                    )));
                }
                seen[i] = true;
                total += 1;
            }
        }
        if total != n {
            return Err(PartitionError::Invalid(format!(
                "only {total} of {n} indices assigned"
            )));
        }
        Ok(())
    }

    /// Serializes as a JSON list of index lists.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.client_indices).expect("index lists always serialize")
    }

    /// Parses [`Partition::to_json`] output and re-checks invariants.
    pub fn from_json(text: &str, n: usize) -> Result<Self, PartitionError> {
        let client_indices: Vec<Vec<usize>> =
            serde_json::from_str(text).map_err(|e| PartitionError::Json(e.to_string()))?;
        Self::new(client_indices, n)
    }
}

fn check_feasible(n: usize, k: usize) -> Result<(), PartitionError> {
    if k == 0 {
        Err(PartitionError::ZeroClients)
    } else if k > n {
        Err(PartitionError::Infeasible { k, n })
    } else {
        Ok(())
    }
}

/// Quota per client: floor(n/k), remainder to the first n mod k clients.
fn quotas(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    (0..k).map(|i| base + usize::from(i < extra)).collect()
}

/// Seeded shuffle, contiguous equal blocks (sizes differ by at most 1).
pub fn partition_iid(n: usize, k: usize, seed: u64) -> Result<Partition, PartitionError> {
    check_feasible(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "partition-iid", &[]));
    let mut client_indices = Vec::with_capacity(k);
    let mut cursor = 0;
    for q in quotas(n, k) {
        client_indices.push(order[cursor..cursor + q].to_vec());
        cursor += q;
    }
    Partition::new(client_indices, n)
}

/// Contiguous blocks of the x-sorted order: client i covers the i-th slice
/// of the input domain.
pub fn partition_domain_split(data: &Dataset, k: usize) -> Result<Partition, PartitionError> {
    let n = data.len();
    check_feasible(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.row(a)[0].total_cmp(&data.row(b)[0]).then(a.cmp(&b)));
    let mut client_indices = Vec::with_capacity(k);
    let mut cursor = 0;
    for q in quotas(n, k) {
        client_indices.push(order[cursor..cursor + q].to_vec());
        cursor += q;
    }
    Partition::new(client_indices, n)
}

/// One draw from Dirichlet(concentration) via normalized Gammas.
fn dirichlet_draw(concentration: f64, classes: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
    let mut q: Vec<f64> = (0..classes).map(|_| gamma.sample(r)).collect();
    let sum: f64 = q.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        for v in &mut q {
            *v /= sum;
        }
    } else {
        // All-zero draws happen for tiny concentrations; fall back to a
        // uniformly chosen one-hot, the alpha -> 0 limit.
        let hot = r.random_range(0..classes);
        for (i, v) in q.iter_mut().enumerate() {
            *v = f64::from(u8::from(i == hot));
        }
    }
    q
}

/// Samples a class index proportional to `q` restricted to classes with
/// remaining examples; uniform among those classes if `q` has no mass there.
fn draw_available_class(q: &[f64], remaining: &[usize], r: &mut ChaCha8Rng) -> usize {
    let mass: f64 = q
        .iter()
        .zip(remaining)
        .filter(|(_, &rem)| rem > 0)
        .map(|(&p, _)| p)
        .sum();
    if mass > 0.0 {
        let mut u = r.random_range(0.0..mass);
        for (c, (&p, &rem)) in q.iter().zip(remaining).enumerate() {
            if rem == 0 {
                continue;
            }
            if u < p {
                return c;
            }
            u -= p;
        }
    }
    // No probability mass left on available classes: redraw uniformly.
    let available: Vec<usize> = remaining
        .iter()
        .enumerate()
        .filter(|(_, &rem)| rem > 0)
        .map(|(c, _)| c)
        .collect();
    available[r.random_range(0..available.len())]
}

/// Draws `quota` class labels from `q` by systematic resampling: one
/// uniform offset, sample points (u+j)/quota mapped through q's CDF. Each
/// label's marginal distribution is exactly `q`, but realized counts stay
/// within one of quota·q_c, so a client's histogram tracks its mixture
/// instead of adding multinomial noise on top of it.
fn systematic_label_counts(q: &[f64], quota: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let mut counts = vec![0usize; q.len()];
    if quota == 0 {
        return counts;
    }
    let total: f64 = q.iter().sum();
    let u: f64 = r.random_range(0.0..1.0);
    let mut cdf = 0.0;
    let mut j = 0usize;
    for (c, &qc) in q.iter().enumerate() {
        cdf += qc / total;
        let bound = cdf * quota as f64;
        while j < quota && (u + j as f64) < bound {
            counts[c] += 1;
            j += 1;
        }
    }
    // Guard against CDF rounding ending a hair below the last bound.
    counts[q.len() - 1] += quota - j;
    counts
}

/// Dirichlet label partition: per-client class mixture q_i ~ Dir(alpha * p)
/// with uniform prior p, quotas filled by drawing class labels from q_i
/// (systematic resampling) and taking unassigned examples of each drawn
/// class; when a drawn class runs out, replacements are redrawn among
/// classes that still have examples. `alpha = 0` gives each client a
/// single class while supplies last.
pub fn partition_dirichlet(
    labels: &[usize],
    k: usize,
    alpha: f64,
    seed: u64,
) -> Result<Partition, PartitionError> {
    let n = labels.len();
    if n == 0 {
        return Err(PartitionError::EmptyLabels);
    }
    check_feasible(n, k)?;
    if !(alpha >= 0.0) {
        return Err(PartitionError::NegativeAlpha { alpha });
    }
    let classes = labels.iter().max().unwrap() + 1;
    let mut r = rng::stream(seed, "partition-dirichlet", &[]);

    // Per-class pools of unassigned examples, shuffled once so "take an
    // unassigned example of class c" is an O(1) pop.
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        pools[y].push(i);
    }
    for pool in &mut pools {
        pool.shuffle(&mut r);
    }
    let mut remaining: Vec<usize> = pools.iter().map(Vec::len).collect();

    let mut client_indices = Vec::with_capacity(k);
    for quota in quotas(n, k) {
        let q = if alpha > 0.0 {
            dirichlet_draw(alpha / classes as f64, classes, &mut r)
        } else {
            let available: Vec<usize> = remaining
                .iter()
                .enumerate()
                .filter(|(_, &rem)| rem > 0)
                .map(|(c, _)| c)
                .collect();
            let hot = available[r.random_range(0..available.len())];
            let mut one_hot = vec![0.0; classes];
            one_hot[hot] = 1.0;
            one_hot
        };
        let counts = systematic_label_counts(&q, quota, &mut r);
        let mut mine = Vec::with_capacity(quota);
        for (c, &want) in counts.iter().enumerate() {
            let take = want.min(remaining[c]);
            for _ in 0..take {
                mine.push(pools[c].pop().expect("count bounded by remaining"));
            }
            remaining[c] -= take;
        }
        while mine.len() < quota {
            let c = draw_available_class(&q, &remaining, &mut r);
            let idx = pools[c].pop().expect("class drawn among non-empty pools");
            remaining[c] -= 1;
            mine.push(idx);
        }
        client_indices.push(mine);
    }
    Partition::new(client_indices, n)
}
