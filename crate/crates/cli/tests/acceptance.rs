//! End-to-end acceptance for the command-line surface: the bundled scenario
//! drives simulate -> fit -> stability -> forecast -> backtest with exit code
//! 0, emitted datasets round-trip through ingestion, runs are byte-identical
//! under a fixed seed, and failure exit codes are distinct per class.

use std::path::{Path, PathBuf};
use std::process::Command;

use regime_vol_cli::dataset::{self, DataKind};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_regime-vol-lab")
}

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_state_study.conf")
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rvl-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin())
        .args(args)
        .env_remove("REGIME_VOL_LAB_OUT")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Criterion 11: the full pipeline from the bundled scenario completes with
/// exit code 0 and the emitted returns file round-trips through ingest.
#[test]
fn criterion_11_end_to_end_pipeline() {
    let out = fresh_dir("pipeline");
    let out_s = out.to_str().unwrap();
    let scenario = scenario();
    let scenario_s = scenario.to_str().unwrap();

    let (code, stdout, stderr) = run(&["simulate", "--config", scenario_s, "--out", out_s]);
    assert_eq!(code, 0, "simulate failed: {stdout}{stderr}");
    let returns_csv = out.join("returns.csv");
    assert!(returns_csv.exists());
    assert!(out.join("states.csv").exists());
    assert!(out.join("simulate_summary.txt").exists());

    // emitted returns round-trip through ingest exactly
    let original = std::fs::read_to_string(&returns_csv).unwrap();
    let ds = dataset::ingest(&returns_csv, DataKind::Returns, None).unwrap();
    assert_eq!(ds.len(), 1000);
    let rewritten = out.join("returns_rewrite.csv");
    dataset::write_returns_csv(&rewritten, &ds.dates, &ds.values).unwrap();
    assert_eq!(
        original,
        std::fs::read_to_string(&rewritten).unwrap(),
        "criterion 11: returns file must survive an ingest/emit cycle byte for byte"
    );

    // desk-scale fit so the pipeline finishes quickly; the scenario carries
    // the full-scale settings
    let data_override = format!("data.path={}", returns_csv.to_str().unwrap());
    let (code, stdout, stderr) = run(&[
        "fit",
        "--config",
        scenario_s,
        "--out",
        out_s,
        &data_override,
        "gibbs.iterations=200",
        "gibbs.warmup=100",
        "gibbs.grid_points=17",
        "gibbs.store_states=true",
        "fracdiff.k=300",
    ]);
    assert_eq!(code, 0, "fit failed: {stdout}{stderr}");
    let fitted = out.join("fitted_params.conf");
    assert!(fitted.exists());
    assert!(out.join("draws.csv").exists());
    assert!(out.join("fit_summary.txt").exists());
    assert!(out.join("hist_a0_1.csv").exists());
    assert!(out.join("hist_p22.csv").exists());
    // run-length-encoded state paths: runs per draw must tile the sample
    let rle = std::fs::read_to_string(out.join("states_rle.csv")).unwrap();
    let mut per_draw = std::collections::BTreeMap::<String, usize>::new();
    for line in rle.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        *per_draw.entry(format!("{},{}", f[0], f[1])).or_default() +=
            f[3].parse::<usize>().unwrap();
    }
    assert_eq!(per_draw.len(), 100, "one path per retained draw");
    // paths cover the in-sample segment (default split: 2/3 of 1000)
    assert!(per_draw.values().all(|&total| total == 666));
    let fitted_s = fitted.to_str().unwrap();

    let (code, stdout, stderr) = run(&["stability", "--config", fitted_s, "--out", out_s]);
    assert_eq!(code, 0, "stability on fitted params: {stdout}{stderr}");
    assert!(out.join("stability_report.txt").exists());

    let (code, stdout, stderr) = run(&["forecast", "--config", fitted_s, "--out", out_s]);
    assert_eq!(code, 0, "forecast failed: {stdout}{stderr}");
    let forecast_csv = out.join("forecast.csv");
    assert!(forecast_csv.exists());
    assert!(out.join("forecast_metrics.txt").exists());

    let forecast_override = format!("backtest.forecast_file={}", forecast_csv.to_str().unwrap());
    let (code, stdout, stderr) = run(&[
        "backtest",
        "--config",
        fitted_s,
        "--out",
        out_s,
        &forecast_override,
    ]);
    assert_eq!(code, 0, "backtest failed: {stdout}{stderr}");
    assert!(out.join("backtest_report.txt").exists());
    assert!(out.join("exceptions_0.05.csv").exists());
    assert!(out.join("exceptions_0.1.csv").exists());

    let report = std::fs::read_to_string(out.join("backtest_report.txt")).unwrap();
    assert!(
        report.contains("lr_uc"),
        "report carries the test statistics"
    );
    println!(
        "[PASS] criterion 11: end-to-end pipeline with exit code 0 and exact ingest round-trip"
    );

    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn repeated_seed_produces_identical_bytes() {
    let a = fresh_dir("det-a");
    let b = fresh_dir("det-b");
    let scenario = scenario();
    for dir in [&a, &b] {
        let (code, _, stderr) = run(&[
            "simulate",
            "--config",
            scenario.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{stderr}");
    }
    for name in ["returns.csv", "states.csv", "simulate_summary.txt"] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
}

#[test]
fn psi_column_is_a_probability() {
    let out = fresh_dir("psi");
    let out_s = out.to_str().unwrap();
    let scenario = scenario();
    let scenario_s = scenario.to_str().unwrap();
    let (code, _, stderr) = run(&["simulate", "--config", scenario_s, "--out", out_s]);
    assert_eq!(code, 0, "{stderr}");
    // forecast directly at the generating parameters
    let data_override = format!("data.path={}/returns.csv", out_s);
    let (code, _, stderr) = run(&[
        "forecast",
        "--config",
        scenario_s,
        "--out",
        out_s,
        &data_override,
    ]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(out.join("forecast.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let psi_col = header.split(',').position(|c| c == "psi_high").unwrap();
    let var_col = header
        .split(',')
        .position(|c| c == "forecast_variance")
        .unwrap();
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let psi: f64 = fields[psi_col].parse().unwrap();
        let var: f64 = fields[var_col].parse().unwrap();
        assert!((0.0..=1.0).contains(&psi), "psi_high {psi} outside [0,1]");
        assert!(var > 0.0);
        rows += 1;
    }
    assert_eq!(rows, 1000);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let out = fresh_dir("codes");
    let out_s = out.to_str().unwrap();
    let scenario = scenario();
    let scenario_s = scenario.to_str().unwrap();

    // usage: unknown subcommand
    let (code, _, _) = run(&["frobnicate", "--config", scenario_s]);
    assert_eq!(code, 2);

    // validation: zero-length simulation
    let (code, _, stderr) = run(&[
        "simulate",
        "--config",
        scenario_s,
        "--out",
        out_s,
        "sim.length=0",
    ]);
    assert_eq!(code, 2, "{stderr}");

    // io: missing data file
    let (code, _, stderr) = run(&[
        "fit",
        "--config",
        scenario_s,
        "--out",
        out_s,
        "data.path=/nonexistent/returns.csv",
    ]);
    assert_eq!(code, 4, "{stderr}");

    // unstable model: triple the shock loadings
    let (code, stdout, stderr) = run(&[
        "stability",
        "--config",
        scenario_s,
        "--out",
        out_s,
        "params.1.a1=0.60",
        "params.1.a2=0.75",
        "params.2.a1=1.20",
        "params.2.a2=1.05",
    ]);
    assert_eq!(code, 10, "expected unstable exit: {stdout}{stderr}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn fixed_weight_family_fits_and_forecasts() {
    let out = fresh_dir("hygarch");
    let out_s = out.to_str().unwrap();
    let scenario = scenario();
    let scenario_s = scenario.to_str().unwrap();
    let (code, _, stderr) = run(&["simulate", "--config", scenario_s, "--out", out_s]);
    assert_eq!(code, 0, "{stderr}");
    let data_override = format!("data.path={}/returns.csv", out_s);
    let (code, _, stderr) = run(&[
        "fit",
        "--config",
        scenario_s,
        "--out",
        out_s,
        &data_override,
        "model.family=hygarch",
        "gibbs.iterations=120",
        "gibbs.warmup=60",
        "gibbs.grid_points=17",
        "fracdiff.k=300",
    ]);
    assert_eq!(code, 0, "{stderr}");
    let fitted = std::fs::read_to_string(out.join("fitted_params.conf")).unwrap();
    assert!(fitted.contains("model.family = hygarch"));
    assert!(
        fitted.contains("params.w = "),
        "fixed weight is reported:\n{fitted}"
    );
    assert!(
        !fitted.contains("params.1.gamma"),
        "no smoothing parameter in the fixed-weight family"
    );
    let (code, _, stderr) = run(&[
        "forecast",
        "--config",
        out.join("fitted_params.conf").to_str().unwrap(),
        "--out",
        out_s,
    ]);
    assert_eq!(code, 0, "{stderr}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn help_and_version_exit_cleanly() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("simulate|stability|fit|forecast|backtest"));
    let (code, stdout, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("regime-vol-lab "));
}

#[test]
fn env_var_sets_default_output_directory() {
    let out = fresh_dir("envvar");
    let scenario = scenario();
    let status = Command::new(bin())
        .args(["simulate", "--config", scenario.to_str().unwrap()])
        .env("REGIME_VOL_LAB_OUT", &out)
        .output()
        .expect("binary runs");
    assert_eq!(status.status.code(), Some(0));
    assert!(out.join("returns.csv").exists());
    let _ = std::fs::remove_dir_all(&out);
}
