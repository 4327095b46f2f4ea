//! Deterministic simulator for federated optimization with server- and
//! client-side heavy-ball momentum.
//!
//! The crate is organized around the lifecycle of a simulated experiment:
//! [`tasks`] defines the learning problems and their gradients, [`data`]
//! splits a dataset across clients, [`sampling`] picks the per-round cohort,
//! [`algorithms`] implements the client/server update rules, [`engine`] runs
//! the round loop, and [`metrics`] measures gradient deviation and
//! communication cost. [`verify`] bundles the self-check suites exposed by
//! the CLI, and [`report`] renders results as CSV/JSON.
//!
//! Every source of randomness is derived from a single master seed through
//! [`rng`], and all floating-point reductions run in a fixed order, so a run
//! is reproducible bit for bit regardless of worker-pool size.

pub mod algorithms;
pub mod data;
pub mod engine;
pub mod metrics;
pub mod params;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod tasks;
pub mod verify;
