//! Cohort selection: which clients participate in each round.
//!
//! Two schedules are supported. `Uniform` draws the cohort without
//! replacement from a stream keyed by (seed, round), so any round can be
//! replayed in isolation. `Cyclic` fixes a seeded permutation of all K
//! clients, splits it into p = K/m consecutive groups, and serves group
//! ((t-1) mod p) in round t; every client then appears exactly once per
//! period and cohorts within a period are disjoint.

use crate::rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("client count must be at least 1")]
    ZeroClients,
    #[error("participation ratio must be in (0, 1], got {ratio}")]
    BadParticipation { ratio: f64 },
    #[error("cyclic schedule needs client count {clients} divisible by cohort size {cohort}")]
    CyclicIndivisible { clients: usize, cohort: usize },
    #[error("round index must be at least 1")]
    ZeroRound,
}

/// Selection schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uniform,
    Cyclic,
}

/// A validated sampler: schedule kind plus population and participation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    kind: SamplerKind,
    clients: usize,
    participation: f64,
    seed: u64,
}

/// Cohort size m = max(1, floor(K·C)), with a tiny guard so that K·C values
/// that are integral in exact arithmetic are not floored down by fp error.
pub fn cohort_size(clients: usize, participation: f64) -> usize {
    let raw = clients as f64 * participation + 1e-9;
    (raw.floor() as usize).clamp(1, clients)
}

impl Sampler {
    pub fn new(
        kind: SamplerKind,
        clients: usize,
        participation: f64,
        seed: u64,
    ) -> Result<Self, SamplerError> {
        if clients == 0 {
            return Err(SamplerError::ZeroClients);
        }
        if !(participation > 0.0 && participation <= 1.0) {
            return Err(SamplerError::BadParticipation {
                ratio: participation,
            });
        }
        let s = Self {
            kind,
            clients,
            participation,
            seed,
        };
        if kind == SamplerKind::Cyclic && clients % s.cohort_size() != 0 {
            return Err(SamplerError::CyclicIndivisible {
                clients,
                cohort: s.cohort_size(),
            });
        }
        Ok(s)
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    pub fn cohort_size(&self) -> usize {
        cohort_size(self.clients, self.participation)
    }

    /// Schedule period p = K/m for the cyclic sampler.
    pub fn period(&self) -> usize {
        self.clients / self.cohort_size()
    }

    /// The cohort for round `t` (1-based), ascending client ids. Pure in
    /// (kind, seed, t): no mutable state is consulted.
    pub fn sample(&self, t: u64) -> Result<Vec<usize>, SamplerError> {
        if t == 0 {
            return Err(SamplerError::ZeroRound);
        }
        let m = self.cohort_size();
        let mut cohort = match self.kind {
            SamplerKind::Uniform => {
                let mut r = rng::stream(self.seed, "uniform-cohort", &[t]);
                rand::seq::index::sample(&mut r, self.clients, m).into_vec()
            }
            SamplerKind::Cyclic => {
                let mut order: Vec<usize> = (0..self.clients).collect();
                order.shuffle(&mut rng::stream(self.seed, "cyclic-order", &[]));
                let group = ((t - 1) % self.period() as u64) as usize;
                order[group * m..(group + 1) * m].to_vec()
            }
        };
        cohort.sort_unstable();
        Ok(cohort)
    }
}
