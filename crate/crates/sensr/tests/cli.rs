use std::path::Path;
use std::process::{Command, Output};

fn sensr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensr"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("run sensr")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toy_workflow_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = sensr(&["--out-dir", path(dir), "demo-toy", "--epochs", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["toy_train.csv", "toy_test.csv", "metric.json", "report.json", "fig_a_baseline.ppm", "fig_b_unfair_map.ppm", "fig_c_sensr.ppm"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let train = dir.join("toy_train.csv");
    let test = dir.join("toy_test.csv");

    let out = sensr(&["--out-dir", path(dir), "metric", "--data", path(&train), "--protected", "group", "--out", "learned.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = sensr(&[
        "--out-dir", path(dir), "train", "--mode", "project", "--data", path(&train), "--metric", path(&dir.join("learned.json")),
        "--epochs", "100", "--hidden", "0", "--out", "project.json", "--log", "project.csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("project.csv").exists());

    let out = sensr(&[
        "--out-dir", path(dir), "audit", "--data", path(&test), "--model", path(&dir.join("project.json")),
        "--metric", path(&dir.join("metric.json")), "--epsilon", "0.1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("audit.json")).unwrap()).unwrap();
    assert!(report["robust_loss"].as_f64().unwrap() >= report["clean_loss"].as_f64().unwrap());
    let csv = std::fs::read_to_string(dir.join("perturbations.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11_000);

    let out = sensr(&["--out-dir", path(dir), "eval", "--data", path(&test), "--model", path(&dir.join("project.json"))]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("B-Acc"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"trainer": {}}"#).unwrap();
    let out = sensr(&["--config", path(&cfg), "demo-toy"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&cfg, r#"{"paths": {"train": "/definitely/not/here.csv"}}"#).unwrap();
    assert_eq!(sensr(&["--config", path(&cfg), "train"]).status.code(), Some(2));

    // train without data anywhere
    assert_eq!(sensr(&["train"]).status.code(), Some(2));
    // bad flag value
    assert_eq!(sensr(&["train", "--mode", "adversarial"]).status.code(), Some(2));
}

#[test]
fn missing_input_file_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sensr(&["--out-dir", path(tmp.path()), "eval", "--data", "/no/such/data.csv", "--model", "/no/such/model.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn divergence_exits_3_and_keeps_last_good() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert!(sensr(&["--out-dir", path(dir), "demo-toy", "--epochs", "0"]).status.success());
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"train": {"epochs": 50, "theta_step": 1e308, "mode": "baseline"}}"#).unwrap();
    let out = sensr(&[
        "--config", path(&cfg), "--out-dir", path(dir), "train", "--data", path(&dir.join("toy_train.csv")), "--hidden", "0",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("model.last_good.json").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert!(sensr(&["--out-dir", path(dir), "demo-toy", "--epochs", "0"]).status.success());
    let data = dir.join("toy_train.csv");
    let metric = dir.join("metric.json");
    for threads in ["1", "3"] {
        let out = sensr(&[
            "--threads", threads, "--out-dir", path(dir), "train", "--mode", "sensr", "--epochs", "100", "--hidden", "4",
            "--data", path(&data), "--metric", path(&metric), "--out", &format!("m{threads}.json"),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(dir.join("m1.json")).unwrap(), std::fs::read(dir.join("m3.json")).unwrap());
}
