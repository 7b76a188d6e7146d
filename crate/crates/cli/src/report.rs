//! Evaluation and Monte-Carlo reports (JSON).

use hybridloc_core::evaluation::{self, EmpiricalCdf, ErrorSeries, ErrorStats, Method};
use hybridloc_core::simulator::Scenario;
use hybridloc_core::Point2;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_VERSION: u32 = 1;
pub const METRIC: &str = "distance_to_reference_trajectory_m";
pub const SYNC_METRIC: &str =
    "distance_to_true_position_at_same_timestamp_m (secondary, for filter tuning)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub count: usize,
    pub median: f64,
    pub p90: f64,
    pub mean: f64,
}

impl From<ErrorStats> for StatsRecord {
    fn from(s: ErrorStats) -> Self {
        Self {
            count: s.count,
            median: s.median,
            p90: s.p90,
            mean: s.mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncSection {
    pub metric: String,
    pub ble: StatsRecord,
    pub hybrid: StatsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub metric: String,
    pub ble: StatsRecord,
    pub hybrid: StatsRecord,
    /// hybrid median / BLE median
    pub median_ratio: f64,
    pub time_synchronized: SyncSection,
}

/// A report plus the error distributions it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub ble_errors: ErrorSeries,
    pub hybrid_errors: ErrorSeries,
    pub ble_cdf: EmpiricalCdf,
    pub hybrid_cdf: EmpiricalCdf,
}

/// Scores both position sequences against the scenario's reference
/// trajectory.
pub fn evaluate(
    scenario: &Scenario,
    ble: &[(f64, Point2)],
    hybrid: &[(f64, Point2)],
) -> Result<Evaluation> {
    let reference = &scenario.trajectory;
    let ble_errors = evaluation::trajectory_errors(Method::BleOnly, ble, reference)?;
    let hybrid_errors = evaluation::trajectory_errors(Method::Hybrid, hybrid, reference)?;
    let summary = evaluation::summarize(&ble_errors, &hybrid_errors)?;

    let truth_at = |t: f64| reference.point_at(scenario.walk_speed * t);
    let sync_ble = evaluation::synchronized_errors(Method::BleOnly, ble, truth_at)?;
    let sync_hybrid = evaluation::synchronized_errors(Method::Hybrid, hybrid, truth_at)?;
    let sync = evaluation::summarize(&sync_ble, &sync_hybrid)?;

    Ok(Evaluation {
        report: EvaluationReport {
            format_version: REPORT_VERSION,
            metric: METRIC.to_string(),
            ble: summary.ble.into(),
            hybrid: summary.hybrid.into(),
            median_ratio: summary.median_ratio,
            time_synchronized: SyncSection {
                metric: SYNC_METRIC.to_string(),
                ble: sync.ble.into(),
                hybrid: sync.hybrid.into(),
            },
        },
        ble_cdf: evaluation::cdf(&ble_errors)?,
        hybrid_cdf: evaluation::cdf(&hybrid_errors)?,
        ble_errors,
        hybrid_errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledRecord {
    pub ble_median: f64,
    pub hybrid_median: f64,
    pub median_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub format_version: u32,
    pub metric: String,
    pub master_seed: u64,
    pub n_runs: usize,
    /// Runs whose hybrid median is strictly below the BLE median.
    pub hybrid_wins: usize,
    pub pooled: PooledRecord,
    pub runs: Vec<RunRecord>,
}

impl MonteCarloReport {
    pub fn from_runs(master_seed: u64, runs: Vec<(RunRecord, Evaluation)>) -> Result<Self> {
        let hybrid_wins = runs
            .iter()
            .filter(|(r, _)| r.report.hybrid.median < r.report.ble.median)
            .count();
        let ble = EmpiricalCdf::from_values(runs.iter().flat_map(|(_, e)| e.ble_errors.errors()))?;
        let hybrid =
            EmpiricalCdf::from_values(runs.iter().flat_map(|(_, e)| e.hybrid_errors.errors()))?;
        Ok(Self {
            format_version: REPORT_VERSION,
            metric: METRIC.to_string(),
            master_seed,
            n_runs: runs.len(),
            hybrid_wins,
            pooled: PooledRecord {
                ble_median: ble.median(),
                hybrid_median: hybrid.median(),
                median_ratio: evaluation::median_ratio(hybrid.median(), ble.median()),
            },
            runs: runs.into_iter().map(|(r, _)| r).collect(),
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| crate::error::CliError::Serialize(e.to_string()))
}
