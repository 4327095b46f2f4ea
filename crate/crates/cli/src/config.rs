//! Experiment-file loading: schema validation, sweep-axis expansion, and
//! path resolution relative to the config file.

use fedsim_core::algorithms::AlgoKind;
use fedsim_core::engine::{PartitionSpec, RunConfig};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A problem with the experiment file itself; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Value lists to sweep over; every axis is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub tau: Option<Vec<usize>>,
    pub participation: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub seed: Option<Vec<u64>>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        fn empty<T>(axis: &Option<Vec<T>>) -> bool {
            axis.as_ref().map_or(true, Vec::is_empty)
        }
        empty(&self.tau)
            && empty(&self.participation)
            && empty(&self.beta)
            && empty(&self.alpha)
            && empty(&self.seed)
    }
}

/// The on-disk experiment file: a base run plus output and sweep options.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Used as the output file stem.
    pub name: String,
    pub run: RunConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sweep: Option<SweepAxes>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A loaded experiment with its output directory resolved against the
/// config file's location.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
}

/// Reads, parses, and statically validates an experiment file. Parse
/// errors carry the file path and serde's line/column anchor.
pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        ConfigError(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    if config.name.is_empty() || config.name.contains(['/', '\\']) {
        return Err(ConfigError(
            "name must be a non-empty filename stem without path separators".to_string(),
        ));
    }
    config
        .run
        .validate()
        .map_err(|e| ConfigError(e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let output_dir = if config.output_dir.is_absolute() {
        config.output_dir.clone()
    } else {
        base.join(&config.output_dir)
    };
    Ok(Experiment { config, output_dir })
}

/// Caps the configured worker count by the `FEDSIM_MAX_THREADS` variable.
pub fn apply_thread_cap(run: &mut RunConfig) -> Result<(), ConfigError> {
    match std::env::var("FEDSIM_MAX_THREADS") {
        Ok(raw) => {
            let cap: usize = raw.parse().map_err(|_| {
                ConfigError(format!(
                    "FEDSIM_MAX_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
            if cap == 0 {
                return Err(ConfigError(
                    "FEDSIM_MAX_THREADS must be a positive integer".to_string(),
                ));
            }
            run.threads = run.threads.min(cap);
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(ConfigError(format!("FEDSIM_MAX_THREADS: {e}"))),
    }
}

/// One sweep cell: the overridden run plus a label for filenames and the
/// axis values for the summary table.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub run: RunConfig,
    /// Filename fragment like `tau2_c0.2_seed3`; empty for the base run.
    pub label: String,
    pub tau: Option<usize>,
    pub participation: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

/// Label for the seed-free part of a cell, used to group summary rows.
pub fn group_label(cell: &SweepCell) -> String {
    let mut out = String::new();
    if let Some(v) = cell.tau {
        let _ = write!(out, "tau{v}");
    }
    if let Some(v) = cell.participation {
        if !out.is_empty() {
            out.push('_');
        }
        let _ = write!(out, "c{v}");
    }
    if let Some(v) = cell.beta {
        if !out.is_empty() {
            out.push('_');
        }
        let _ = write!(out, "beta{v}");
    }
    if let Some(v) = cell.alpha {
        if !out.is_empty() {
            out.push('_');
        }
        let _ = write!(out, "alpha{v}");
    }
    out
}

fn with_overrides(
    base: &RunConfig,
    tau: Option<usize>,
    participation: Option<f64>,
    beta: Option<f64>,
    alpha: Option<f64>,
    seed: Option<u64>,
) -> Result<RunConfig, ConfigError> {
    let mut run = base.clone();
    if let Some(tau) = tau {
        run.algo = match run.algo {
            AlgoKind::GhbmPractical { beta, .. } => AlgoKind::GhbmPractical { beta, tau },
            AlgoKind::GhbmTheory { beta, .. } => AlgoKind::GhbmTheory { beta, tau },
            other => {
                return Err(ConfigError(format!(
                    "sweep axis tau does not apply to {}",
                    other.name()
                )))
            }
        };
    }
    if let Some(beta) = beta {
        run.algo = match run.algo {
            AlgoKind::FedAvgM { .. } => AlgoKind::FedAvgM { beta },
            AlgoKind::FedCm { .. } => AlgoKind::FedCm { beta },
            AlgoKind::GhbmPractical { tau, .. } => AlgoKind::GhbmPractical { beta, tau },
            AlgoKind::GhbmTheory { tau, .. } => AlgoKind::GhbmTheory { beta, tau },
            AlgoKind::LocalGhbm { .. } => AlgoKind::LocalGhbm { beta },
            AlgoKind::FedHbm { .. } => AlgoKind::FedHbm { beta },
            other => {
                return Err(ConfigError(format!(
                    "sweep axis beta does not apply to {}",
                    other.name()
                )))
            }
        };
    }
    if let Some(c) = participation {
        run.participation = c;
    }
    if let Some(alpha) = alpha {
        match run.partition {
            PartitionSpec::Dirichlet { .. } => {
                run.partition = PartitionSpec::Dirichlet { alpha };
            }
            _ => {
                return Err(ConfigError(
                    "sweep axis alpha applies only to dirichlet partitioning".to_string(),
                ))
            }
        }
    }
    if let Some(seed) = seed {
        run.seed = seed;
    }
    run.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(run)
}

/// Expands the sweep axes into their Cartesian product, in axis order
/// tau → participation → beta → alpha → seed with seed innermost. Every
/// cell is validated before anything runs.
pub fn expand_cells(
    base: &RunConfig,
    axes: &SweepAxes,
) -> Result<Vec<SweepCell>, ConfigError> {
    fn axis<T: Copy>(values: &Option<Vec<T>>) -> Vec<Option<T>> {
        match values {
            Some(v) if !v.is_empty() => v.iter().copied().map(Some).collect(),
            _ => vec![None],
        }
    }
    let mut cells = Vec::new();
    for &tau in &axis(&axes.tau) {
        for &participation in &axis(&axes.participation) {
            for &beta in &axis(&axes.beta) {
                for &alpha in &axis(&axes.alpha) {
                    for &seed in &axis(&axes.seed) {
                        let run =
                            with_overrides(base, tau, participation, beta, alpha, seed)?;
                        let mut cell = SweepCell {
                            run,
                            label: String::new(),
                            tau,
                            participation,
                            beta,
                            alpha,
                            seed,
                        };
                        let mut label = group_label(&cell);
                        if let Some(v) = cell.seed {
                            if !label.is_empty() {
                                label.push('_');
                            }
                            let _ = write!(label, "seed{v}");
                        }
                        cell.label = label;
                        cells.push(cell);
                    }
                }
            }
        }
    }
    Ok(cells)
}
