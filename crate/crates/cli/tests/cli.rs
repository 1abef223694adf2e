//! End-to-end tests of the `covppp` binary: wiring, file outputs, exit
//! codes, and the no-partial-output rule.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_covppp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_prices(dir: &Path) -> PathBuf {
    let path = dir.join("prices.csv");
    let mut rows = String::from("month,AAA,BBB,CCC,DDD\n");
    // A deterministic wiggly price panel, long enough for a small backtest.
    for t in 0..30 {
        let base = 100.0 + t as f64;
        rows.push_str(&format!(
            "m{:02},{:.4},{:.4},{:.4},{:.4}\n",
            t,
            base + (t as f64 * 0.7).sin() * 4.0,
            0.5 * base + (t as f64 * 1.3).cos() * 2.0,
            2.0 * base + (t as f64 * 0.4).sin() * 7.0,
            0.8 * base + (t as f64 * 2.1).cos() * 3.0,
        ));
    }
    fs::write(&path, rows).unwrap();
    path
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    for sub in ["simulate", "estimate", "gmvp", "tune", "backtest", "tables"] {
        assert!(
            String::from_utf8_lossy(&out.stdout).contains(sub),
            "help must mention {sub}"
        );
    }
}

#[test]
fn simulate_writes_tables_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--out",
        out_dir.to_str().unwrap(),
        "--p",
        "10",
        "--n",
        "30",
        "--reps",
        "1",
        "--n-draws",
        "20",
        "--cv-splits",
        "2",
        "--cv-grid-points",
        "3",
        "--cv-n-draws",
        "10",
        "--seed",
        "11",
    ]);
    assert_success(&out);
    for f in [
        "table1_cov_error.csv",
        "table2_gmvp_error.csv",
        "table3_coverage.csv",
        "results.csv",
        "metadata.json",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let meta = fs::read_to_string(out_dir.join("metadata.json")).unwrap();
    assert!(meta.contains("\"seed\": 11"));
    assert!(meta.contains("chacha12"));
}

#[test]
fn unknown_method_exits_2_and_names_the_token() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--out",
        out_dir.to_str().unwrap(),
        "--methods",
        "ppp,banana",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("banana"));
    assert!(!out_dir.exists(), "no partial outputs on usage errors");
}

#[test]
fn malformed_flag_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--out",
        out_dir.to_str().unwrap(),
        "--reps",
        "not-a-number",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn run_directories_are_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let args = [
        "simulate",
        "--out",
        out_dir.to_str().unwrap(),
        "--p",
        "10",
        "--n",
        "20",
        "--reps",
        "1",
        "--n-draws",
        "10",
        "--methods",
        "samplecov",
        "--cv-splits",
        "2",
        "--cv-grid-points",
        "2",
        "--cv-n-draws",
        "5",
    ];
    assert_success(&run(&args));
    let again = run(&args);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    let mut forced: Vec<&str> = args.to_vec();
    forced.push("--force");
    assert_success(&run(&forced));
}

#[test]
fn estimate_gmvp_tune_backtest_tables_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path());
    let est_dir = dir.path().join("est");
    let out = run(&[
        "estimate",
        "--data",
        prices.to_str().unwrap(),
        "--format",
        "prices-csv",
        "--method",
        "ppp",
        "--n-draws",
        "40",
        "--cv-splits",
        "2",
        "--cv-grid-points",
        "4",
        "--cv-n-draws",
        "10",
        "--out",
        est_dir.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_success(&out);
    for f in [
        "estimate.csv",
        "ensemble.csv",
        "ensemble_meta.json",
        "cv_result.csv",
    ] {
        assert!(est_dir.join(f).exists(), "missing {f}");
    }

    let gmvp_dir = dir.path().join("gmvp");
    let out = run(&[
        "gmvp",
        "--ensemble",
        est_dir.join("ensemble.csv").to_str().unwrap(),
        "--level",
        "0.95",
        "--out",
        gmvp_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let intervals = fs::read_to_string(gmvp_dir.join("intervals.csv")).unwrap();
    assert!(intervals.starts_with("asset,mean,lower,upper"));
    assert_eq!(intervals.lines().count(), 5); // header + 4 assets

    let weights_dir = dir.path().join("gmvp_point");
    let out = run(&[
        "gmvp",
        "--matrix",
        est_dir.join("estimate.csv").to_str().unwrap(),
        "--out",
        weights_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let weights = fs::read_to_string(weights_dir.join("weights.csv")).unwrap();
    assert!(weights.starts_with("asset,weight"));
    assert!(weights.contains("AAA"));

    let tune_dir = dir.path().join("tune");
    let out = run(&[
        "tune",
        "--data",
        prices.to_str().unwrap(),
        "--format",
        "prices-csv",
        "--method",
        "thres",
        "--objective",
        "gmvp-variance",
        "--cv-splits",
        "2",
        "--cv-grid-points",
        "4",
        "--out",
        tune_dir.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_success(&out);
    let scores = fs::read_to_string(tune_dir.join("cv_result.csv")).unwrap();
    assert!(scores.starts_with("gamma,epsilon,mean_loss,se_loss"));

    let bt_dir = dir.path().join("bt");
    let out = run(&[
        "backtest",
        "--data",
        prices.to_str().unwrap(),
        "--format",
        "prices-csv",
        "--train",
        "12",
        "--test",
        "6",
        "--iterations",
        "2",
        "--methods",
        "iw,samplecov",
        "--n-draws",
        "20",
        "--cv-splits",
        "2",
        "--cv-grid-points",
        "3",
        "--cv-n-draws",
        "8",
        "--out",
        bt_dir.to_str().unwrap(),
        "--seed",
        "6",
    ]);
    assert_success(&out);
    let table = fs::read_to_string(bt_dir.join("backtest.csv")).unwrap();
    assert!(table.starts_with("method,mean_realized_sd,n_windows_used"));
    assert_eq!(table.lines().count(), 3);
    assert!(bt_dir.join("backtest_windows.csv").exists());

    // tables re-emits summary tables from a simulate run directory.
    let sim_dir = dir.path().join("sim");
    assert_success(&run(&[
        "simulate",
        "--out",
        sim_dir.to_str().unwrap(),
        "--p",
        "10",
        "--n",
        "25",
        "--reps",
        "1",
        "--n-draws",
        "15",
        "--methods",
        "iw,samplecov",
        "--cv-splits",
        "2",
        "--cv-grid-points",
        "2",
        "--cv-n-draws",
        "5",
    ]));
    let tables_dir = dir.path().join("tables");
    assert_success(&run(&[
        "tables",
        "--results",
        sim_dir.to_str().unwrap(),
        "--out",
        tables_dir.to_str().unwrap(),
    ]));
    let a = fs::read(sim_dir.join("table1_cov_error.csv")).unwrap();
    let b = fs::read(tables_dir.join("table1_cov_error.csv")).unwrap();
    assert_eq!(a, b, "re-emitted table must match the original bytes");
}

#[test]
fn gmvp_requires_exactly_one_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gmvp", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for (name, workers) in [("w1", "1"), ("w3", "3")] {
        let out_dir = dir.path().join(name);
        assert_success(&run(&[
            "simulate",
            "--out",
            out_dir.to_str().unwrap(),
            "--p",
            "10",
            "--n",
            "30",
            "--reps",
            "2",
            "--n-draws",
            "30",
            "--cv-splits",
            "2",
            "--cv-grid-points",
            "3",
            "--cv-n-draws",
            "10",
            "--seed",
            "123",
            "--workers",
            workers,
        ]));
        let mut blob = Vec::new();
        for f in [
            "table1_cov_error.csv",
            "table2_gmvp_error.csv",
            "table3_coverage.csv",
            "results.csv",
        ] {
            blob.extend(fs::read(out_dir.join(f)).unwrap());
        }
        outputs.push(blob);
    }
    assert_eq!(outputs[0], outputs[1]);
}
