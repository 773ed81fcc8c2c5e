//! Repeated seeded stage runs and their statistics.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::identify::run_stage;
use crate::error::{Error, Result};
use crate::objectives::{ReferenceData, Stage, WeightSet};

/// Stage and stopping precision of one block of runs.
pub type StudyRow = (Stage, f64);

/// Rows of the standard study, in report order.
pub fn default_plan() -> Vec<StudyRow> {
    vec![
        (Stage::Elastic, 1e-3),
        (Stage::Hardening, 1e-2),
        (Stage::Hardening, 1e-3),
        (Stage::Softening, 1e-2),
        (Stage::Softening, 3e-3),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub success: bool,
    pub evaluations: usize,
    pub value: f64,
    pub pair: [f64; 2],
    /// Absolute error of each identified parameter in percent of its
    /// admissible interval.
    pub errors: [f64; 2],
    pub solver_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    pub runs: usize,
    pub successes: usize,
    /// Over successful runs; `None` without any.
    pub max_evaluations: Option<usize>,
    pub mean_evaluations: Option<f64>,
    pub mean_error: Option<[f64; 2]>,
    pub max_error: Option<[f64; 2]>,
    /// Unsuccessful runs, all of which ended on the evaluation cap.
    pub cap_failures: usize,
    /// Runs with at least one failed simulation.
    pub runs_with_solver_failures: usize,
    pub solver_failures: usize,
}

impl RowStats {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let ok: Vec<&RunRecord> = records.iter().filter(|r| r.success).collect();
        let n = ok.len();
        let (mean_error, max_error) = if n == 0 {
            (None, None)
        } else {
            let mut mean = [0.0; 2];
            let mut max = [0.0f64; 2];
            for r in &ok {
                for d in 0..2 {
                    mean[d] += r.errors[d] / n as f64;
                    max[d] = max[d].max(r.errors[d]);
                }
            }
            (Some(mean), Some(max))
        };
        RowStats {
            runs: records.len(),
            successes: n,
            max_evaluations: ok.iter().map(|r| r.evaluations).max(),
            mean_evaluations: (n > 0).then(|| ok.iter().map(|r| r.evaluations as f64).sum::<f64>() / n as f64),
            mean_error,
            max_error,
            cap_failures: records.len() - n,
            runs_with_solver_failures: records.iter().filter(|r| r.solver_failures > 0).count(),
            solver_failures: records.iter().map(|r| r.solver_failures).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub stage: Stage,
    pub precision: f64,
    pub records: Vec<RunRecord>,
    pub stats: RowStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub config_hash: String,
    pub first_seed: u64,
    pub rows: Vec<RowReport>,
}

/// Identified-parameter error in percent of the interval admissible at the
/// true parameters.
pub fn parameter_errors(stage: Stage, config: &RunConfig, pair: [f64; 2]) -> [f64; 2] {
    let truth = config.reference_params();
    let bounds = config.bounds();
    let mut out = [0.0; 2];
    for (d, id) in stage.params().into_iter().enumerate() {
        out[d] = 100.0 * (pair[d] - truth.get(id)).abs() / bounds.interval(id, &truth).width();
    }
    out
}

/// `runs` independent seeded runs per row. Parameters outside the stage are
/// held at the configured reference values; seeds are `first_seed + i`.
/// Results do not depend on `workers`.
pub fn reliability_study(
    config: &RunConfig,
    reference: Arc<ReferenceData>,
    weights: &WeightSet,
    plan: &[StudyRow],
    runs: usize,
    workers: usize,
) -> Result<ReliabilityReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let truth = config.reference_params();
    let mut rows = Vec::new();
    for &(stage, precision) in plan {
        let records: Vec<RunRecord> = pool.install(|| {
            (0..runs as u64)
                .into_par_iter()
                .map(|i| {
                    let seed = config.seed.wrapping_add(i);
                    let (r, _) = run_stage(stage, config, reference.clone(), weights, &truth, seed, precision)?;
                    Ok(RunRecord {
                        seed,
                        success: r.success,
                        evaluations: r.evaluations,
                        value: r.value,
                        pair: r.pair,
                        errors: parameter_errors(stage, config, r.pair),
                        solver_failures: r.solver_failures,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        rows.push(RowReport {
            stage,
            precision,
            stats: RowStats::from_records(&records),
            records,
        });
    }
    Ok(ReliabilityReport {
        config_hash: config.hash(),
        first_seed: config.seed,
        rows,
    })
}

/// Change of mean error between two precisions of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub parameter: String,
    pub coarse: f64,
    pub fine: f64,
    pub coarse_mean: Option<f64>,
    pub fine_mean: Option<f64>,
    /// Fine mean error not above the coarse one.
    pub holds: bool,
}

/// For every stage with several precisions, compares the mean error of each
/// parameter between consecutive precisions.
pub fn precision_trend(report: &ReliabilityReport) -> Vec<TrendCheck> {
    let mut out = Vec::new();
    for stage in Stage::ALL {
        let mut rows: Vec<&RowReport> = report.rows.iter().filter(|r| r.stage == stage).collect();
        rows.sort_by(|a, b| b.precision.total_cmp(&a.precision));
        for w in rows.windows(2) {
            for (d, id) in stage.params().into_iter().enumerate() {
                let cm = w[0].stats.mean_error.map(|m| m[d]);
                let fm = w[1].stats.mean_error.map(|m| m[d]);
                out.push(TrendCheck {
                    parameter: id.name().to_string(),
                    coarse: w[0].precision,
                    fine: w[1].precision,
                    coarse_mean: cm,
                    fine_mean: fm,
                    holds: matches!((cm, fm), (Some(c), Some(f)) if f <= c),
                });
            }
        }
    }
    out
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Plain-text tables: run statistics, then parameter accuracy.
pub fn report_text(report: &ReliabilityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "configuration {}  first seed {}", report.config_hash, report.first_seed);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<10} {:>9} {:>6} {:>9} {:>9} {:>9} {:>8} {:>8}",
        "stage", "precision", "runs", "success", "max eval", "avg eval", "cap", "solver"
    );
    for row in &report.rows {
        let st = &row.stats;
        let _ = writeln!(
            s,
            "{:<10} {:>9.0e} {:>6} {:>9} {:>9} {:>9} {:>8} {:>8}",
            row.stage.name(),
            row.precision,
            st.runs,
            st.successes,
            opt(st.max_evaluations),
            opt(st.mean_evaluations.map(|m| format!("{m:.1}"))),
            st.cap_failures,
            st.runs_with_solver_failures,
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<10} {:>9} {:>14} {:>14}", "parameter", "precision", "mean error %", "max error %");
    for row in &report.rows {
        for (d, id) in row.stage.params().into_iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<10} {:>9.0e} {:>14} {:>14}",
                id.name(),
                row.precision,
                opt(row.stats.mean_error.map(|m| format!("{:.2}", m[d]))),
                opt(row.stats.max_error.map(|m| format!("{:.2}", m[d]))),
            );
        }
    }
    s
}
