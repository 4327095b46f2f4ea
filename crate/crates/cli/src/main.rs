//! `fedsim`: run federated-optimization experiments from JSON config
//! files, sweep hyperparameter grids, probe gradient deviation, and run
//! the built-in verification suite.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.

mod config;

use anyhow::Context;
use clap::{Parser, Subcommand};
use config::{ConfigError, Experiment, SweepCell};
use fedsim_core::engine::{self, RunResult};
use fedsim_core::metrics::MetricKind;
use fedsim_core::report;
use fedsim_core::verify;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fedsim",
    about = "Deterministic federated-optimization simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a config file describes.
    Run { config: PathBuf },
    /// Run the Cartesian product of the config's sweep axes.
    Sweep { config: PathBuf },
    /// Run the built-in verification suite.
    Verify,
    /// Run in deviation-probe mode and write the probe series.
    Probe { config: PathBuf },
}

enum AppError {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Sweep { config } => cmd_sweep(&config),
        Command::Verify => cmd_verify(),
        Command::Probe { config } => cmd_probe(&config),
    };
    match outcome {
        Ok(code) => code,
        Err(AppError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("moving into place: {}", path.display()))?;
    Ok(())
}

fn load_experiment(path: &Path) -> Result<Experiment, AppError> {
    let mut exp = config::load(path)?;
    config::apply_thread_cap(&mut exp.config.run)?;
    Ok(exp)
}

fn execute(run: fedsim_core::engine::RunConfig) -> Result<RunResult, AppError> {
    engine::run(run)
        .map_err(|e| AppError::Runtime(anyhow::Error::new(e).context("run failed")))
}

fn final_summary_line(result: &RunResult) -> String {
    let last = result.records.last();
    let mut line = format!(
        "rounds {} | bytes {}",
        result.rounds, result.bytes_total
    );
    if let Some(r) = last {
        let _ = write!(line, " | train_loss {:.6e}", r.train_loss);
        if let Some(v) = r.test_loss {
            let _ = write!(line, " | test_loss {v:.6e}");
        }
        if let Some(v) = r.test_accuracy {
            let _ = write!(line, " | test_accuracy {v:.4}");
        }
    }
    line
}

fn run_and_write(exp: &Experiment) -> Result<RunResult, AppError> {
    let result = execute(exp.config.run.clone())?;
    let csv_path = exp.output_dir.join(format!("{}.csv", exp.config.name));
    write_atomic(csv_path.as_path(), report::records_csv(&result.records).as_bytes())?;
    let manifest_path = exp
        .output_dir
        .join(format!("{}.manifest.json", exp.config.name));
    let manifest = serde_json::to_string_pretty(&report::run_manifest(&result))
        .context("serializing manifest")?;
    write_atomic(manifest_path.as_path(), format!("{manifest}\n").as_bytes())?;
    println!("{} -> {}", exp.config.name, csv_path.display());
    println!("{}", final_summary_line(&result));
    Ok(result)
}

fn cmd_run(path: &Path) -> Result<ExitCode, AppError> {
    let exp = load_experiment(path)?;
    run_and_write(&exp)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_probe(path: &Path) -> Result<ExitCode, AppError> {
    let exp = load_experiment(path)?;
    if exp.config.run.probe.is_none() {
        return Err(ConfigError(
            "probe mode needs a \"probe\" section in the run config".to_string(),
        )
        .into());
    }
    let result = execute(exp.config.run.clone())?;
    let path = exp
        .output_dir
        .join(format!("{}.deviation.csv", exp.config.name));
    write_atomic(
        path.as_path(),
        report::deviation_csv(&result.probe_samples).as_bytes(),
    )?;
    println!(
        "{} -> {} ({} samples)",
        exp.config.name,
        path.display(),
        result.probe_samples.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify() -> Result<ExitCode, AppError> {
    let outcomes = verify::run_all();
    let mut all_passed = true;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<28}  {}", o.name, o.detail);
        all_passed &= o.passed;
    }
    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed");
        Ok(ExitCode::from(1))
    }
}

struct SummaryGroup {
    label: String,
    tau: Option<usize>,
    participation: Option<f64>,
    beta: Option<f64>,
    alpha: Option<f64>,
    train_loss: Vec<f64>,
    test_loss: Vec<f64>,
    test_accuracy: Vec<f64>,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

fn summary_csv(groups: &[SummaryGroup], seeds_per_group: usize) -> String {
    let mut out = String::from(
        "tau,participation,beta,alpha,seeds,\
         final_train_loss_mean,final_train_loss_std,\
         final_test_loss_mean,final_test_loss_std,\
         final_test_accuracy_mean,final_test_accuracy_std\n",
    );
    let opt_display = |v: Option<String>| v.unwrap_or_default();
    for g in groups {
        let stats = |values: &[f64]| match mean_std(values) {
            Some((m, s)) => (report::fmt_real(m), report::fmt_real(s)),
            None => (String::new(), String::new()),
        };
        let (tl_m, tl_s) = stats(&g.train_loss);
        let (vl_m, vl_s) = stats(&g.test_loss);
        let (va_m, va_s) = stats(&g.test_accuracy);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            opt_display(g.tau.map(|v| v.to_string())),
            opt_display(g.participation.map(|v| v.to_string())),
            opt_display(g.beta.map(|v| v.to_string())),
            opt_display(g.alpha.map(|v| v.to_string())),
            seeds_per_group,
            tl_m,
            tl_s,
            vl_m,
            vl_s,
            va_m,
            va_s
        );
    }
    out
}

fn cmd_sweep(path: &Path) -> Result<ExitCode, AppError> {
    let exp = load_experiment(path)?;
    let axes = exp.config.sweep.clone().unwrap_or_default();
    if axes.is_empty() {
        run_and_write(&exp)?;
        return Ok(ExitCode::SUCCESS);
    }
    let cells = config::expand_cells(&exp.config.run, &axes)?;
    let seeds_per_group = axes
        .seed
        .as_ref()
        .map_or(1, |s| if s.is_empty() { 1 } else { s.len() });

    let mut groups: Vec<SummaryGroup> = Vec::new();
    for cell in &cells {
        let result = execute(cell.run.clone())?;
        let cell_path = exp
            .output_dir
            .join(format!("{}.{}.csv", exp.config.name, cell.label));
        write_atomic(
            cell_path.as_path(),
            report::records_csv(&result.records).as_bytes(),
        )?;
        println!("{} -> {}", cell.label, cell_path.display());

        let label = config::group_label(cell);
        if groups.last().map(|g| g.label.as_str()) != Some(label.as_str()) {
            groups.push(new_group(label, cell));
        }
        let group = groups.last_mut().expect("just pushed");
        if let Some(v) = engine::final_quality(&result, MetricKind::TrainLoss) {
            group.train_loss.push(v);
        }
        if let Some(v) = engine::final_quality(&result, MetricKind::TestLoss) {
            group.test_loss.push(v);
        }
        if let Some(v) = engine::final_quality(&result, MetricKind::TestAccuracy) {
            group.test_accuracy.push(v);
        }
    }

    let summary_path = exp
        .output_dir
        .join(format!("{}.summary.csv", exp.config.name));
    write_atomic(
        summary_path.as_path(),
        summary_csv(&groups, seeds_per_group).as_bytes(),
    )?;
    println!(
        "{} cells -> {}",
        cells.len(),
        summary_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn new_group(label: String, cell: &SweepCell) -> SummaryGroup {
    SummaryGroup {
        label,
        tau: cell.tau,
        participation: cell.participation,
        beta: cell.beta,
        alpha: cell.alpha,
        train_loss: Vec::new(),
        test_loss: Vec::new(),
        test_accuracy: Vec::new(),
    }
}
