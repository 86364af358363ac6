use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rp-entropy"));
    c.env_remove("RP_ENTROPY_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(dir: &Path, command: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(format!("{command}.json"))).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn gram_sweep_is_byte_identical_across_runs_and_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["gram-sweep", "--seed", "42", "--trials", "40"];
    let ra = run(&[&args[..], &["--out", &out_arg(a.path()), "--jobs", "1"]].concat());
    let rb = run(&[&args[..], &["--out", &out_arg(b.path()), "--jobs", "3"]].concat());
    assert_eq!(ra.status.code(), Some(0));
    assert_eq!(rb.status.code(), Some(0));
    for f in ["gram-sweep.json", "gram-sweep-checks.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let meta: Value = serde_json::from_slice(&std::fs::read(a.path().join("gram-sweep.meta.json")).unwrap()).unwrap();
    assert!(meta["timestamp_unix"].as_u64().unwrap() > 0);
    let r = report(a.path(), "gram-sweep");
    assert_eq!(r["tool"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["master_seed"], 42);
    assert_eq!(r["config"]["instances"], 40);
}

#[test]
fn gram_sweep_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"subsystem_counts": [3], "schur_powers": []}"#).unwrap();
    let out = run(&[
        "gram-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "2,3",
        "--dims",
        "2x2",
        "--trials",
        "25",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "gram-sweep");
    assert_eq!(r["result"]["instances_run"], 25);
    assert_eq!(r["result"]["checks_run"], 50);
    assert_eq!(r["result"]["failures"], 0);
}

#[test]
fn malformed_config_exits_1_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"instances\": 3,\n  oops\n}\n").unwrap();
    let out = run(&["gram-sweep", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:3:3:"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["search", "--trials", "many"]).status.code(), Some(1));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn fermion_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fermion", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "fermion");
    for k in ["wick_vs_cauchy", "cauchy_vs_entropy", "vertex"] {
        assert!(r["result"]["max_residuals"][k].as_f64().unwrap() <= 1e-10);
    }
    assert!(dir.path().join("fermion-identities.csv").exists());
}

#[test]
fn kl_round_trip_passes_and_writes_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["kl", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "kl");
    for rt in r["result"]["round_trip"].as_array().unwrap() {
        assert!(rt["fit_residual"].as_f64().unwrap() <= 1e-6);
    }
    let fixtures = r["fixtures"].as_array().unwrap();
    assert_eq!(fixtures.len(), 1);
    let name = fixtures[0].as_str().unwrap();
    let bytes = std::fs::read(dir.path().join(name)).unwrap();
    let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(name, format!("fixtures/{hex}.json"));
}

#[test]
fn cft_unit_passes_and_violator_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["cft", "--out", &out_arg(dir.path())]).status.code(), Some(0));
    let r = report(dir.path(), "cft");
    assert_eq!(r["result"]["z_diagonal_exact"], true);
    assert_eq!(r["result"]["by_n"][0]["derivative_inequality"]["passed"], true);
    assert_eq!(r["result"]["by_n"][0]["midpoint_inequality"]["passed"], true);

    let cfg = dir.path().join("v.json");
    std::fs::write(&cfg, r#"{"function": "violator"}"#).unwrap();
    let out = run(&["cft", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(dir.path(), "cft");
    assert_eq!(r["result"]["by_n"][0]["derivative_inequality"]["passed"], false);
}

#[test]
fn cft_accepts_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("f.csv");
    let mut text = String::from("x,F\n");
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        text.push_str(&format!("{x},{}\n", 1.0 + 0.05 * x * (1.0 - x)));
    }
    std::fs::write(&table, text).unwrap();
    let cfg = dir.path().join("t.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"function": {{"table": {{"path": {:?}}}}}, "pairs": 200}}"#, table.to_str().unwrap()),
    )
    .unwrap();
    let out = run(&["cft", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)), "{out:?}");
    let r = report(dir.path(), "cft");
    assert_eq!(r["result"]["by_n"][0]["function_validation"]["symmetric"], true);
}

#[test]
fn search_control_mode_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["search", "--target", "integer-n", "--trials", "30", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    // d_A = 1 makes every Gram entry 1, so roundoff crosses a 1e-300 threshold
    let out = run(&[
        "search",
        "--target",
        "integer-n",
        "--dims",
        "1x4,1x4,1x4",
        "--tolerance",
        "1e-300",
        "--trials",
        "50",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["cft", "--trials", "10"]).env("RP_ENTROPY_OUT", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("cft.json").exists());
}

#[test]
fn numerics_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k.json");
    std::fs::write(&cfg, r#"{"power_law": [{"lambda": 1.0, "n": 1.0, "central_charge": 6.0}]}"#).unwrap();
    let out = run(&["kl", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
