use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hybridloc::commands::{self, GlobalOptions};
use hybridloc::logs;
use hybridloc::scenario::{FovModeName, ScenarioFile};
use hybridloc_core::evaluation::{self, Method};
use hybridloc_core::fusion::LocalizationMode;
use hybridloc_core::simulator::default_scenario;
use proptest::prelude::*;
use tempfile::TempDir;

fn default_toml() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/default.toml")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridloc"))
}

struct Pipeline {
    log: PathBuf,
    truth: PathBuf,
    ble: PathBuf,
    hybrid: PathBuf,
    report: PathBuf,
}

fn run_files(dir: &Path, scenario: &Path, globals: &GlobalOptions) -> Pipeline {
    let p = Pipeline {
        log: dir.join("log.csv"),
        truth: dir.join("truth.csv"),
        ble: dir.join("ble.csv"),
        hybrid: dir.join("hybrid.csv"),
        report: dir.join("report.json"),
    };
    commands::cmd_simulate(scenario, &p.log, &p.truth, globals).unwrap();
    commands::cmd_localize(scenario, &p.log, &p.ble, LocalizationMode::BleOnly, globals).unwrap();
    commands::cmd_localize(
        scenario,
        &p.log,
        &p.hybrid,
        LocalizationMode::Hybrid,
        globals,
    )
    .unwrap();
    commands::cmd_evaluate(&p.ble, &p.hybrid, scenario, &p.report, globals).unwrap();
    p
}

#[test]
fn simulate_is_byte_identical_for_same_seed() {
    let dir = TempDir::new().unwrap();
    let g = GlobalOptions::default();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    let pa = run_files(&a, &default_toml(), &g);
    let pb = run_files(&b, &default_toml(), &g);
    for (x, y) in [
        (&pa.log, &pb.log),
        (&pa.truth, &pb.truth),
        (&pa.hybrid, &pb.hybrid),
        (&pa.report, &pb.report),
    ] {
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn seed_override_changes_the_log() {
    let dir = TempDir::new().unwrap();
    let one = run_files(dir.path(), &default_toml(), &GlobalOptions::default());
    let first = fs::read(&one.log).unwrap();
    let other = dir.path().join("other.csv");
    let g = GlobalOptions {
        seed: Some(2),
        ..Default::default()
    };
    commands::cmd_simulate(&default_toml(), &other, &dir.path().join("t.csv"), &g).unwrap();
    assert_ne!(first, fs::read(other).unwrap());
}

#[test]
fn default_log_has_every_anchor_every_tick() {
    let dir = TempDir::new().unwrap();
    let s = commands::cmd_simulate(
        &default_toml(),
        &dir.path().join("log.csv"),
        &dir.path().join("truth.csv"),
        &GlobalOptions::default(),
    )
    .unwrap();
    assert_eq!(s.ticks, 121);
    assert_eq!(s.rss_rows, 484);
    assert!(s.range_rows > 0);
    let entries = logs::read_measurement_log(&dir.path().join("log.csv")).unwrap();
    assert_eq!(entries.len(), s.rss_rows + s.range_rows);
    let truth = logs::read_truth(&dir.path().join("truth.csv")).unwrap();
    assert_eq!(truth.len(), 121);
}

#[test]
fn missing_anchor_section_is_reported() {
    let dir = TempDir::new().unwrap();
    let src = fs::read_to_string(default_toml()).unwrap();
    let stripped: String = src
        .split("\n\n")
        .filter(|block| !block.starts_with("[[anchors]]"))
        .collect::<Vec<_>>()
        .join("\n\n");
    let path = dir.path().join("bad.toml");
    fs::write(&path, stripped).unwrap();
    let out = bin()
        .args(["simulate"])
        .arg(&path)
        .arg("--log")
        .arg(dir.path().join("l.csv"))
        .arg("--truth")
        .arg(dir.path().join("t.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("E_MISSING_SECTION"), "{stderr}");
    assert!(stderr.contains("anchors"), "{stderr}");
    assert!(!dir.path().join("l.csv").exists());
}

#[test]
fn ble_mode_ignores_range_rows() {
    let dir = TempDir::new().unwrap();
    let g = GlobalOptions::default();
    let p = run_files(dir.path(), &default_toml(), &g);
    let src = fs::read_to_string(&p.log).unwrap();
    let rss_only: String = src
        .lines()
        .filter(|l| !l.contains(",RANGE,"))
        .map(|l| format!("{l}\n"))
        .collect();
    assert_ne!(rss_only, src);
    let stripped = dir.path().join("rss_only.csv");
    fs::write(&stripped, rss_only).unwrap();

    let ble2 = dir.path().join("ble2.csv");
    commands::cmd_localize(
        &default_toml(),
        &stripped,
        &ble2,
        LocalizationMode::BleOnly,
        &g,
    )
    .unwrap();
    assert_eq!(fs::read(&p.ble).unwrap(), fs::read(&ble2).unwrap());

    // Without RANGE rows the hybrid positions are the BLE positions.
    let hyb2 = dir.path().join("hyb2.csv");
    commands::cmd_localize(
        &default_toml(),
        &stripped,
        &hyb2,
        LocalizationMode::Hybrid,
        &g,
    )
    .unwrap();
    let a = logs::read_estimates(&ble2).unwrap();
    let b = logs::read_estimates(&hyb2).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.estimate, y.estimate);
        assert!(y.detecting_sensor_ids.is_empty());
    }
}

#[test]
fn corrupt_row_is_named() {
    let dir = TempDir::new().unwrap();
    let p = run_files(dir.path(), &default_toml(), &GlobalOptions::default());
    let mut lines: Vec<String> = fs::read_to_string(&p.log)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    lines[7] = "0.6,A3,RSS,not-a-number".into();
    fs::write(&p.log, lines.join("\n") + "\n").unwrap();
    let out = bin()
        .arg("localize")
        .arg(default_toml())
        .arg(&p.log)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":8:"), "{stderr}");
    assert!(stderr.contains("E_ROW"), "{stderr}");
}

#[test]
fn unknown_source_is_named() {
    let dir = TempDir::new().unwrap();
    let p = run_files(dir.path(), &default_toml(), &GlobalOptions::default());
    let mut lines: Vec<String> = fs::read_to_string(&p.log)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    lines[2] = lines[2].replacen(",A", ",Z", 1);
    fs::write(&p.log, lines.join("\n") + "\n").unwrap();
    let err = commands::cmd_localize(
        &default_toml(),
        &p.log,
        &dir.path().join("x.csv"),
        LocalizationMode::Hybrid,
        &GlobalOptions::default(),
    )
    .unwrap_err();
    assert_eq!(err.code(), "E_UNKNOWN_SOURCE");
    assert!(err.to_string().contains(":3:"), "{err}");
}

#[test]
fn identical_estimates_give_unit_ratio() {
    let dir = TempDir::new().unwrap();
    let p = run_files(dir.path(), &default_toml(), &GlobalOptions::default());
    let out = dir.path().join("same.json");
    let r = commands::cmd_evaluate(
        &p.ble,
        &p.ble,
        &default_toml(),
        &out,
        &GlobalOptions::default(),
    )
    .unwrap();
    assert_eq!(r.median_ratio, 1.0);
    assert_eq!(r.ble, r.hybrid);
    let (tb, th) = commands::cdf_table_paths(&out);
    for t in [tb, th] {
        let rows = logs::read_pairs(&t, &logs::CDF_HEADER).unwrap();
        assert_eq!(rows.last().unwrap().1, 1.0);
        assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
    }
}

#[test]
fn report_matches_core_summary() {
    let dir = TempDir::new().unwrap();
    let p = run_files(dir.path(), &default_toml(), &GlobalOptions::default());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&p.report).unwrap()).unwrap();
    let sc = default_scenario();
    let read = |path: &Path| -> Vec<_> {
        logs::read_estimates(path)
            .unwrap()
            .into_iter()
            .map(|r| (r.timestamp, r.estimate.position))
            .collect()
    };
    let ble =
        evaluation::trajectory_errors(Method::BleOnly, &read(&p.ble), &sc.trajectory).unwrap();
    let hyb =
        evaluation::trajectory_errors(Method::Hybrid, &read(&p.hybrid), &sc.trajectory).unwrap();
    let s = evaluation::summarize(&ble, &hyb).unwrap();
    assert_eq!(report["ble"]["median"].as_f64().unwrap(), s.ble.median);
    assert_eq!(
        report["hybrid"]["median"].as_f64().unwrap(),
        s.hybrid.median
    );
    assert_eq!(report["median_ratio"].as_f64().unwrap(), s.median_ratio);
    assert_eq!(report["ble"]["count"].as_u64().unwrap(), 121);
}

fn write_calibration(dir: &Path, rows: &[(f64, f64)]) -> PathBuf {
    let path = dir.join("calib.csv");
    logs::write_pairs(&path, &logs::CALIBRATION_HEADER, rows).unwrap();
    path
}

#[test]
fn fit_recovers_exact_cubic() {
    let dir = TempDir::new().unwrap();
    let c = [0.01, 0.002, -0.003, 0.004];
    let rows: Vec<_> = (0..12)
        .map(|i| {
            let d = 0.3 + 0.27 * i as f64;
            (d, c[0] + d * (c[1] + d * (c[2] + d * c[3])))
        })
        .collect();
    let out = dir.path().join("model.toml");
    let fit = commands::cmd_fit_sensor(&write_calibration(dir.path(), &rows), None, &out).unwrap();
    assert!(fit.residual_rms < 1e-9, "{}", fit.residual_rms);
    for (a, b) in fit.coeffs.iter().zip(c) {
        assert!((a - b).abs() < 1e-9);
    }
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("residual_rms_m"));
    let parsed: toml::Table = text.parse().unwrap();
    assert_eq!(parsed["stddev_coeffs"].as_array().unwrap().len(), 4);
}

#[test]
fn fit_of_shipped_calibration_keeps_short_range_tight() {
    let dir = TempDir::new().unwrap();
    let calib =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/default_stddev_calibration.csv");
    let bias = dir.path().join("bias.csv");
    logs::write_pairs(
        &bias,
        &logs::BIAS_HEADER,
        &[(0.5, 0.01), (1.0, 0.02), (2.0, 0.03), (3.5, 0.3)],
    )
    .unwrap();
    let out = dir.path().join("model.toml");
    let fit = commands::cmd_fit_sensor(&calib, Some(&bias), &out).unwrap();
    let sigma =
        |d: f64| fit.coeffs[0] + d * (fit.coeffs[1] + d * (fit.coeffs[2] + d * fit.coeffs[3]));
    assert!(sigma(1.0) <= 0.05);
    assert!(sigma(3.5) > sigma(2.0));
    let parsed: toml::Table = fs::read_to_string(&out).unwrap().parse().unwrap();
    assert_eq!(parsed["bias_table"].as_array().unwrap().len(), 4);
}

#[test]
fn fit_with_three_distances_is_rank_error() {
    let dir = TempDir::new().unwrap();
    let calib = write_calibration(
        dir.path(),
        &[(0.5, 0.02), (1.0, 0.03), (2.0, 0.05), (2.0, 0.06)],
    );
    let err = commands::cmd_fit_sensor(&calib, None, &dir.path().join("m.toml")).unwrap_err();
    assert_eq!(err.code(), "E_FIT_RANK");
}

#[test]
fn single_run_montecarlo_matches_pipeline() {
    let dir = TempDir::new().unwrap();
    let g = GlobalOptions::default();
    let out = dir.path().join("mc.json");
    let mc = commands::cmd_montecarlo(&default_toml(), 1, &out, &g).unwrap();
    assert_eq!(mc.n_runs, 1);
    let mut sc = default_scenario();
    sc.master_seed = commands::run_seed(sc.master_seed, 0);
    assert_eq!(mc.runs[0].seed, sc.master_seed);
    let (_, e) = commands::run_pipeline(&sc, &g).unwrap();
    assert_eq!(mc.runs[0].report, e.report);
    assert_eq!(mc.pooled.ble_median, e.report.ble.median);
    assert_eq!(mc.pooled.hybrid_median, e.report.hybrid.median);

    let zero = commands::cmd_montecarlo(&default_toml(), 0, &out, &g).unwrap_err();
    assert_eq!(zero.code(), "E_INVALID");
}

#[test]
fn montecarlo_is_order_independent_of_threads() {
    let sc = default_scenario();
    let g = GlobalOptions::default();
    let a = commands::montecarlo(&sc, 4, &g).unwrap();
    let b = commands::montecarlo(&sc, 4, &g).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.runs.iter().map(|r| r.run).collect::<Vec<_>>(),
        vec![0, 1, 2, 3]
    );
}

#[test]
fn file_pipeline_matches_in_memory() {
    let dir = TempDir::new().unwrap();
    let g = GlobalOptions::default();
    let p = run_files(dir.path(), &default_toml(), &g);
    let (run, e) = commands::run_pipeline(&default_scenario(), &g).unwrap();
    let logged: Vec<_> = logs::read_measurement_log(&p.log)
        .unwrap()
        .into_iter()
        .map(|l| l.measurement)
        .collect();
    assert_eq!(logged, run.measurements);
    let report: hybridloc::report::EvaluationReport =
        serde_json::from_str(&fs::read_to_string(&p.report).unwrap()).unwrap();
    assert_eq!(report, e.report);
}

#[test]
fn fov_override_reaches_the_simulator() {
    let dir = TempDir::new().unwrap();
    let count = |mode| {
        let g = GlobalOptions {
            fov_mode: Some(mode),
            ..Default::default()
        };
        commands::cmd_simulate(
            &default_toml(),
            &dir.path().join("l.csv"),
            &dir.path().join("t.csv"),
            &g,
        )
        .unwrap()
        .range_rows
    };
    assert!(count(FovModeName::Declared) > count(FovModeName::Measured));
}

#[test]
fn binary_runs_full_workflow() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let ok = |args: &[&std::ffi::OsStr]| {
        let out = bin().args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    let scen = d.join("s.toml");
    let (log, truth, ble, hyb, rep) = (
        d.join("l.csv"),
        d.join("t.csv"),
        d.join("b.csv"),
        d.join("h.csv"),
        d.join("r.json"),
    );
    ok(&["init".as_ref(), scen.as_os_str()]);
    assert_eq!(fs::read(&scen).unwrap(), fs::read(default_toml()).unwrap());
    ok(&[
        "simulate".as_ref(),
        scen.as_os_str(),
        "--log".as_ref(),
        log.as_os_str(),
        "--truth".as_ref(),
        truth.as_os_str(),
    ]);
    ok(&[
        "localize".as_ref(),
        scen.as_os_str(),
        log.as_os_str(),
        "--out".as_ref(),
        ble.as_os_str(),
        "--mode".as_ref(),
        "ble".as_ref(),
    ]);
    ok(&[
        "localize".as_ref(),
        scen.as_os_str(),
        log.as_os_str(),
        "--out".as_ref(),
        hyb.as_os_str(),
    ]);
    let stdout = ok(&[
        "evaluate".as_ref(),
        "--ble".as_ref(),
        ble.as_os_str(),
        "--hybrid".as_ref(),
        hyb.as_os_str(),
        "--scenario".as_ref(),
        scen.as_os_str(),
        "--out".as_ref(),
        rep.as_os_str(),
    ]);
    assert!(stdout.contains("ratio"));
    assert!(d.join("r.cdf_ble.csv").exists());
    assert!(d.join("r.cdf_hybrid.csv").exists());
}

fn finite() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_file_round_trips(
        seed in 0u64..(i64::MAX as u64),
        tx in -80.0..-40.0f64,
        exp in 1.5..4.0f64,
        noise in 0.5..8.0f64,
        x in finite(),
        y in finite(),
        bore in -180.0..180.0f64,
        declared in any::<bool>(),
    ) {
        let mut file = ScenarioFile::from_scenario(&default_scenario());
        file.sim.seed = seed;
        file.sim.fov_mode = if declared { FovModeName::Declared } else { FovModeName::Measured };
        file.path_loss.tx_ref_power_dbm = tx;
        file.path_loss.exponent = exp;
        file.path_loss.noise_stddev_db = noise;
        file.anchors[0].x = x;
        file.anchors[0].y = y;
        file.sensors[0].boresight_deg = bore;
        let text = file.to_toml().unwrap();
        let back = ScenarioFile::parse(&text, Path::new("mem.toml")).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}
