//! File-interface behavior of the CLI: config parsing, CSV schemas, digest
//! embedding, overwrite protection, exit codes.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use compsim::cli::{run, CliError, Experiment, RunManifest};

use common::table1_network;

fn table1_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/table1.json")
}

fn onetier_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/onetier.json")
}

fn manifest(experiment: Experiment, config: PathBuf, out: PathBuf) -> RunManifest {
    RunManifest {
        experiment,
        config_path: config,
        seed: 3,
        trials: 200,
        output_dir: out,
        force: false,
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn delay_sweep_outputs_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        Experiment::DelaySweep,
        table1_config_path(),
        dir.path().to_path_buf(),
    );
    let written = run(&m).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"delay_sweep_coverage.csv".to_string()));
    assert!(names.contains(&"delay_sweep_throughput.csv".to_string()));
    assert!(names.contains(&"manifest.json".to_string()));

    let coverage = read(&dir.path().join("delay_sweep_coverage.csv"));
    let mut lines = coverage.lines();
    let digest_line = lines.next().unwrap();
    assert!(digest_line.starts_with("# config_digest="));
    assert!(digest_line.contains("seed=3"));
    assert_eq!(
        lines.next().unwrap(),
        "mean_delay_ms,metric,value,std_error,baseline_value,baseline_std_error,trials,seed"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7); // one per configured delay mean
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[1], "coverage");
        // full round-trip precision: fields parse back as f64 exactly
        let v: f64 = fields[2].parse().unwrap();
        assert_eq!(format!("{v}"), fields[2]);
    }

    let echo = read(&dir.path().join("manifest.json"));
    let parsed: serde_json::Value = serde_json::from_str(&echo).unwrap();
    assert_eq!(parsed["experiment"], "delay_sweep");
    assert_eq!(parsed["seed"], 3);
    assert_eq!(
        parsed["config_digest"].as_str().unwrap().len(),
        16,
        "digest is 16 hex chars"
    );
    assert!(parsed["resolved_config"]["network"]["tiers"].is_array());
}

#[test]
fn outputs_are_never_silently_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        Experiment::TimeFractionReport,
        table1_config_path(),
        dir.path().to_path_buf(),
    );
    run(&m).unwrap();
    let err = run(&m).unwrap_err();
    assert!(matches!(err, CliError::OutputExists(_)));
    assert_eq!(err.exit_code(), 2);
    let mut forced = m;
    forced.force = true;
    run(&forced).unwrap();
}

#[test]
fn bounds_validation_schema() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        Experiment::BoundsValidation,
        onetier_config_path(),
        dir.path().to_path_buf(),
    );
    run(&m).unwrap();
    let body = read(&dir.path().join("bounds_validation.csv"));
    let mut lines = body.lines();
    assert!(lines.next().unwrap().starts_with("# config_digest="));
    assert_eq!(
        lines.next().unwrap(),
        "beta,empirical_cdf,empirical_se,upper_bound,lower_bound_or_fault,dominance_lhs,dominance_rhs"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 31); // -10..=20 dB
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        // alpha = 4: the closed-form lower bound is at the gamma pole
        assert!(fields[4].starts_with("domain_fault:"), "{row}");
        assert!(!fields[5].is_empty() && !fields[6].is_empty());
    }
}

#[test]
fn l_sweep_and_intratier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        Experiment::LSweep,
        table1_config_path(),
        dir.path().join("l"),
    );
    run(&m).unwrap();
    let body = read(&dir.path().join("l/l_sweep_throughput.csv"));
    assert!(body.lines().nth(1).unwrap().starts_with("l,metric,"));
    assert_eq!(body.lines().count(), 2 + 6); // header lines + L in 0..=5

    let m = manifest(
        Experiment::IntraTierLoss,
        table1_config_path(),
        dir.path().join("loss"),
    );
    let written = run(&m).unwrap();
    assert_eq!(written.len(), 5); // 2 axes x 2 metrics + manifest
    let body = read(&dir.path().join("loss/intratier_loss_l_coverage.csv"));
    assert!(body
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("l,metric,cross_value,cross_std_error,intra_value"));
}

#[test]
fn validation_failures_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = table1_network(8); // L = 8 vs N = 8 on the serving tier
    bad.condition_serving_tier = Some(0);
    let cfg = serde_json::json!({
        "network": bad,
        "coherence": {"mean_ms": 80.0, "shape": "deterministic"},
        "delay": {"stages": 4, "mean_ms": 20.0},
        "target_sir_db": 3.0,
        "shannon_gap_db": 3.0
    });
    let config_path = dir.path().join("bad.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let m = manifest(
        Experiment::DelaySweep,
        config_path.clone(),
        dir.path().join("out"),
    );
    let err = run(&m).unwrap_err();
    assert!(matches!(err, CliError::Validation(_)));
    assert_eq!(err.exit_code(), 1);
    assert!(err
        .to_string()
        .contains("num_coordinated must be < serving antennas"));

    // and through the binary, including the exit status
    let status = Command::new(env!("CARGO_BIN_EXE_compsim"))
        .args([
            "--config",
            config_path.to_str().unwrap(),
            "--experiment",
            "delay-sweep",
            "--trials",
            "50",
            "--out",
            dir.path().join("out2").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("validation failed"));
}

#[test]
fn binary_runs_time_fraction_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_compsim"))
        .args([
            "--config",
            table1_config_path().to_str().unwrap(),
            "--experiment",
            "time-fraction-report",
            "--trials",
            "20000",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = read(&dir.path().join("time_fraction_report.csv"));
    let mut lines = body.lines().skip(1);
    assert_eq!(
        lines.next().unwrap(),
        "mean_delay_ms,tau_analytic,tau_renewal,abs_diff,blocks,seed"
    );
    // zero-delay row reports tau = 1 from both estimators
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[1], "1");
    assert_eq!(first[2], "1");
}

#[test]
fn missing_config_is_a_runtime_fault() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        Experiment::DelaySweep,
        dir.path().join("nope.json"),
        dir.path().to_path_buf(),
    );
    let err = run(&m).unwrap_err();
    assert!(matches!(err, CliError::ReadConfig { .. }));
    assert_eq!(err.exit_code(), 2);
}
