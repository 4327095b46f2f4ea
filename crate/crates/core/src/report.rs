//! CSV and JSON rendering of run outputs.
//!
//! Real numbers are written with 17 significant digits in scientific
//! notation, which round-trips every finite `f64` exactly; absent metrics
//! become empty CSV fields. Output is a pure function of the data, so two
//! identical runs serialize to identical bytes.

use crate::engine::{RoundRecord, RunResult};
use crate::metrics::{CostLedger, DeviationSample};
use std::fmt::Write as _;

/// Formats a real with 17 significant digits ('.'-separated, no grouping).
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// Per-round metrics CSV: `round,train_loss,test_loss,test_accuracy,deviation,bytes_cum`.
pub fn records_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from("round,train_loss,test_loss,test_accuracy,deviation,bytes_cum\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.round,
            fmt_real(r.train_loss),
            fmt_opt(r.test_loss),
            fmt_opt(r.test_accuracy),
            fmt_opt(r.deviation),
            r.bytes_cum
        );
    }
    out
}

/// Deviation-probe CSV: `round,tau,window,deviation,deviation_raw`.
pub fn deviation_csv(samples: &[DeviationSample]) -> String {
    let mut out = String::from("round,tau,window,deviation,deviation_raw\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.round,
            s.tau,
            s.window,
            fmt_real(s.value),
            fmt_real(s.raw)
        );
    }
    out
}

/// Communication-cost CSV, one row per algorithm.
pub fn cost_csv(ledger: &CostLedger) -> String {
    let mut out = String::from(
        "algorithm,overhead,model_bytes,cohort_size,rounds_total,rounds_to_target,\
         total_bytes,target_fraction,bytes_to_target,reduction_vs_baseline\n",
    );
    for row in &ledger.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.algorithm,
            fmt_real(row.overhead),
            row.model_bytes,
            row.cohort_size,
            row.rounds_total,
            row.rounds_to_target,
            row.total_bytes,
            fmt_real(row.target_fraction),
            fmt_real(row.bytes_to_target),
            fmt_real(row.reduction_vs_baseline)
        );
    }
    out
}

/// JSON manifest of a finished run: enough to reproduce and to summarize it.
pub fn run_manifest(result: &RunResult) -> serde_json::Value {
    let last = result.records.last();
    serde_json::json!({
        "config_hash": format!("{:016x}", result.config_hash),
        "seed": result.seed,
        "rounds": result.rounds,
        "cohort_size": result.cohort_size,
        "model_bytes": result.model_bytes,
        "bytes_total": result.bytes_total,
        "work_units": result.work_units,
        "final": {
            "round": last.map(|r| r.round),
            "train_loss": last.map(|r| r.train_loss),
            "test_loss": last.and_then(|r| r.test_loss),
            "test_accuracy": last.and_then(|r| r.test_accuracy),
        },
    })
}
