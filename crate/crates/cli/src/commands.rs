//! The `simulate → localize → evaluate` workflow, sensor calibration and
//! the Monte-Carlo wrapper. Each command is a plain function so tests can
//! drive it without spawning a process.

use std::fs;
use std::path::{Path, PathBuf};

use hybridloc_core::fusion::{self, HybridOptions, HybridOutput, LocalizationMode};
use hybridloc_core::proximity::{self, BiasCurve, CubicFit};
use hybridloc_core::rng::derive_seed;
use hybridloc_core::simulator::{self, Scenario, SimulationRun};
use hybridloc_core::{Measurement, Point2};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::logs::{self, BIAS_HEADER, CALIBRATION_HEADER};
use crate::report::{self, Evaluation, EvaluationReport, MonteCarloReport, RunRecord};
use crate::scenario::{FovModeName, ScenarioFile};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalOptions {
    /// Replaces the scenario's `sim.seed`.
    pub seed: Option<u64>,
    /// Replaces the scenario's `sim.fov_mode`.
    pub fov_mode: Option<FovModeName>,
    /// Experimental: feed the fused position back into the filter.
    pub fusion_feedback: bool,
}

impl GlobalOptions {
    fn hybrid_options(&self, sc: &Scenario) -> HybridOptions {
        HybridOptions {
            process_noise: sc.process_noise,
            feedback: self.fusion_feedback,
        }
    }
}

/// Loads a scenario file and applies the global overrides.
pub fn load_scenario(path: &Path, globals: &GlobalOptions) -> Result<Scenario> {
    let src = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut file = ScenarioFile::parse(&src, path)?;
    if let Some(seed) = globals.seed {
        file.sim.seed = seed;
    }
    if let Some(mode) = globals.fov_mode {
        file.sim.fov_mode = mode;
    }
    file.to_scenario(&src, path)
}

/// Runs the filter over `stream` in the given mode.
pub fn localize_stream(
    sc: &Scenario,
    stream: &[Measurement],
    mode: LocalizationMode,
    globals: &GlobalOptions,
) -> Result<Vec<HybridOutput>> {
    Ok(fusion::localize(
        stream,
        &sc.infrastructure,
        &sc.filter_init,
        &globals.hybrid_options(sc),
        mode,
    )?)
}

fn positions(outputs: &[HybridOutput]) -> Vec<(f64, Point2)> {
    outputs
        .iter()
        .map(|o| (o.timestamp, o.fused.position))
        .collect()
}

/// simulate + localize (both modes) + evaluate, entirely in memory.
pub fn run_pipeline(sc: &Scenario, globals: &GlobalOptions) -> Result<(SimulationRun, Evaluation)> {
    let run = simulator::run_scenario(sc)?;
    let ble = localize_stream(sc, &run.measurements, LocalizationMode::BleOnly, globals)?;
    let hybrid = localize_stream(sc, &run.measurements, LocalizationMode::Hybrid, globals)?;
    let evaluation = report::evaluate(sc, &positions(&ble), &positions(&hybrid))?;
    Ok((run, evaluation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulateSummary {
    pub ticks: usize,
    pub rss_rows: usize,
    pub range_rows: usize,
}

pub fn cmd_simulate(
    scenario: &Path,
    out_log: &Path,
    out_truth: &Path,
    globals: &GlobalOptions,
) -> Result<SimulateSummary> {
    let sc = load_scenario(scenario, globals)?;
    let run = simulator::run_scenario(&sc)?;
    logs::write_measurement_log(out_log, &run.measurements)?;
    logs::write_truth(out_truth, &run.truth)?;
    let range_rows = run
        .measurements
        .iter()
        .filter(|m| m.kind == hybridloc_core::MeasurementKind::Range)
        .count();
    Ok(SimulateSummary {
        ticks: run.truth.len(),
        rss_rows: run.measurements.len() - range_rows,
        range_rows,
    })
}

pub fn cmd_localize(
    scenario: &Path,
    log: &Path,
    out_estimates: &Path,
    mode: LocalizationMode,
    globals: &GlobalOptions,
) -> Result<usize> {
    let sc = load_scenario(scenario, globals)?;
    let entries = logs::read_measurement_log(log)?;
    logs::resolve_sources(log, &entries, &sc.infrastructure)?;
    let stream: Vec<Measurement> = entries.into_iter().map(|e| e.measurement).collect();
    let outputs = localize_stream(&sc, &stream, mode, globals)?;
    logs::write_estimates(out_estimates, mode, &outputs)?;
    Ok(outputs.len())
}

/// Paths of the two CDF tables written next to a report.
pub fn cdf_table_paths(report: &Path) -> (PathBuf, PathBuf) {
    (
        report.with_extension("cdf_ble.csv"),
        report.with_extension("cdf_hybrid.csv"),
    )
}

pub fn cmd_evaluate(
    estimates_ble: &Path,
    estimates_hybrid: &Path,
    scenario: &Path,
    out_report: &Path,
    globals: &GlobalOptions,
) -> Result<EvaluationReport> {
    let sc = load_scenario(scenario, globals)?;
    let read = |p: &Path| -> Result<Vec<(f64, Point2)>> {
        Ok(logs::read_estimates(p)?
            .into_iter()
            .map(|r| (r.timestamp, r.estimate.position))
            .collect())
    };
    let evaluation = report::evaluate(&sc, &read(estimates_ble)?, &read(estimates_hybrid)?)?;
    write_text(out_report, &report::to_json(&evaluation.report)?)?;
    let (ble_table, hybrid_table) = cdf_table_paths(out_report);
    logs::write_cdf_table(&ble_table, &evaluation.ble_cdf.table())?;
    logs::write_cdf_table(&hybrid_table, &evaluation.hybrid_cdf.table())?;
    Ok(evaluation.report)
}

#[derive(Debug, Serialize)]
struct SensorFragment {
    stddev_coeffs: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    bias_table: Option<Vec<[f64; 2]>>,
}

/// Fits the standard-deviation cubic to `(distance_m, stddev_m)` rows and
/// writes a `[[sensors]]` fragment with the coefficients (and the bias table
/// when one is given).
pub fn cmd_fit_sensor(
    calibration: &Path,
    bias: Option<&Path>,
    out_model: &Path,
) -> Result<CubicFit> {
    let samples = logs::read_pairs(calibration, &CALIBRATION_HEADER)?;
    let fit = proximity::fit_stddev_cubic(&samples).map_err(|e| CliError::Fit {
        path: calibration.to_path_buf(),
        message: e.to_string(),
    })?;
    let bias_table = match bias {
        Some(path) => {
            let pairs = logs::read_pairs(path, &BIAS_HEADER)?;
            let curve = BiasCurve::new(pairs).map_err(|e| CliError::Invalid {
                path: path.to_path_buf(),
                line: None,
                message: e.to_string(),
            })?;
            Some(curve.points().iter().map(|&(d, b)| [d, b]).collect())
        }
        None => None,
    };
    let fragment = SensorFragment {
        stddev_coeffs: fit.coeffs,
        bias_table,
    };
    let body = toml::to_string(&fragment).map_err(|e| CliError::Serialize(e.to_string()))?;
    let mut text = format!(
        "# fitted from {} ({} samples)\n# residual_rms_m = {:e}\n",
        calibration.display(),
        samples.len(),
        fit.residual_rms,
    );
    if samples.len() > 4 {
        text.push_str(&format!(
            "# coefficient standard errors = {:?}\n",
            fit.std_errors
        ));
    }
    text.push_str(&body);
    write_text(out_model, &text)?;
    Ok(fit)
}

/// Seed of Monte-Carlo run `index`.
pub fn run_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// Runs the full pipeline for `n_runs` derived seeds and aggregates.
pub fn montecarlo(
    base: &Scenario,
    n_runs: usize,
    globals: &GlobalOptions,
) -> Result<MonteCarloReport> {
    let master = base.master_seed;
    let runs = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut sc = base.clone();
            sc.master_seed = run_seed(master, i);
            let (_, evaluation) = run_pipeline(&sc, globals)?;
            Ok((
                RunRecord {
                    run: i,
                    seed: sc.master_seed,
                    report: evaluation.report.clone(),
                },
                evaluation,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    MonteCarloReport::from_runs(master, runs)
}

pub fn cmd_montecarlo(
    scenario: &Path,
    n_runs: usize,
    out_report: &Path,
    globals: &GlobalOptions,
) -> Result<MonteCarloReport> {
    if n_runs == 0 {
        return Err(CliError::Invalid {
            path: scenario.to_path_buf(),
            line: None,
            message: "n_runs must be at least 1".into(),
        });
    }
    let sc = load_scenario(scenario, globals)?;
    let report = montecarlo(&sc, n_runs, globals)?;
    write_text(out_report, &report::to_json(&report)?)?;
    Ok(report)
}

/// Writes the default scenario as TOML.
pub fn cmd_init(out: &Path) -> Result<()> {
    let text = ScenarioFile::from_scenario(&simulator::default_scenario()).to_toml()?;
    write_text(out, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
