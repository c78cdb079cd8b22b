use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geolatent"));
    c.env_remove("GEOLATENT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_run(dir: &Path, n_train: &str, n_val: &str) {
    let d = dir.to_str().unwrap();
    ok(&["generate", "--out", d, "--n-train", n_train, "--n-val", n_val, "--seed", "3"]);
}

const MICRO: [&str; 6] = ["--hidden1", "8", "--hidden2", "6", "--latent-dim", "4"];

#[test]
fn generate_one_state_per_channel_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_run(a.path(), "7", "3");
    small_run(b.path(), "7", "3");
    let ta = fs::read(a.path().join("train.jsonl")).unwrap();
    assert_eq!(ta, fs::read(b.path().join("train.jsonl")).unwrap());
    assert_eq!(
        fs::read(a.path().join("val.jsonl")).unwrap(),
        fs::read(b.path().join("val.jsonl")).unwrap()
    );
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 8);
    for ch in ["depolarized", "werner", "isotropic", "thermal"] {
        assert_eq!(text.matches(&format!("\"channel\":\"{ch}\"")).count(), 1, "{ch}");
    }
    assert!(text.lines().next().unwrap().contains("\"format_version\":1"));
}

#[test]
fn seed_from_environment_and_config_precedence() {
    let env = tempfile::tempdir().unwrap();
    let flag = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["generate", "--out", env.path().to_str().unwrap(), "--n-train", "3", "--n-val", "1"])
        .env("GEOLATENT_SEED", "11")
        .output()
        .unwrap();
    assert!(out.status.success());
    ok(&["generate", "--out", flag.path().to_str().unwrap(), "--n-train", "3", "--n-val", "1", "--seed", "11"]);
    assert_eq!(
        fs::read(env.path().join("train.jsonl")).unwrap(),
        fs::read(flag.path().join("train.jsonl")).unwrap()
    );

    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = cfg_dir.path().join("run.toml");
    fs::write(&cfg, "seed = 11\nn_train = 5\nn_val = 2\n").unwrap();
    ok(&["generate", "--config", cfg.to_str().unwrap(), "--out", cfg_dir.path().to_str().unwrap(), "--n-train", "3", "--n-val", "1"]);
    assert_eq!(
        fs::read(cfg_dir.path().join("train.jsonl")).unwrap(),
        fs::read(flag.path().join("train.jsonl")).unwrap()
    );

    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let out = run(&["generate", "--config", cfg.to_str().unwrap(), "--out", cfg_dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "--n-train", "many"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "--purity-min", "0.9", "--purity-max", "0.8"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["train", "--out", d]).status.code(), Some(1));
    let out = bin().args(["generate", "--out", d]).env("GEOLATENT_SEED", "x").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_analyze_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    small_run(dir.path(), "30", "10");
    let mut args = vec!["train", "--out", d, "--epochs", "1", "--batch-size", "8", "--lambda-metric", "0"];
    args.extend(MICRO);
    ok(&args);
    let hist = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    let lines: Vec<&str> = hist.lines().collect();
    assert_eq!(lines[0], "epoch,recon_loss,metric_loss,total_loss,val_fidelity");
    assert_eq!(lines.len(), 2);
    let cols: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(cols[3], cols[1]);

    ok(&["analyze", "--out", d, "--pairs", "50", "--k-mle", "5", "--k-curv", "6"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_states"], 40);
    assert_eq!(report["correlation"]["n_pairs"], 50);
    for f in ["pairs.csv", "pca_spectrum.csv", "curvature.csv", "distance_fidelity.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let first = fs::read(dir.path().join("pairs.csv")).unwrap();
    ok(&["analyze", "--out", d, "--pairs", "50", "--k-mle", "5", "--k-curv", "6"]);
    assert_eq!(first, fs::read(dir.path().join("pairs.csv")).unwrap());
}

#[test]
fn analyze_caps_pairs_on_small_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    small_run(dir.path(), "5", "5");
    let mut args = vec!["train", "--out", d, "--epochs", "1"];
    args.extend(MICRO);
    ok(&args);
    let train = dir.path().join("train.jsonl");
    ok(&["analyze", "--out", d, "--data", train.to_str().unwrap(), "--pairs", "10"]);
    let pairs = fs::read_to_string(dir.path().join("pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 11);
    ok(&["analyze", "--out", d, "--data", train.to_str().unwrap(), "--pairs", "40"]);
    let pairs = fs::read_to_string(dir.path().join("pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 11);
}

#[test]
fn literal_decoder_validation_fidelity_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    small_run(dir.path(), "14", "7");
    let mut args = vec!["train", "--out", d, "--epochs", "3", "--patience", "5", "--decoder", "literal"];
    args.extend(MICRO);
    ok(&args);
    let hist = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    let vals: Vec<f64> = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 3);
    assert!(vals.iter().all(|v| (v - vals[0]).abs() <= 1e-12));
}

#[test]
fn sweep_lambda_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    small_run(dir.path(), "21", "7");
    let mut args = vec!["sweep-lambda", "--out", d, "--lambdas", "0,0.06", "--epochs", "2", "--k-mle", "4", "--k-curv", "5", "--pairs", "30"];
    args.extend(MICRO);
    ok(&args);
    let summary = fs::read_to_string(dir.path().join("sweep_lambda.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("lambda,best_epoch,val_fidelity,pearson_r,spearman_rho\n"));
    assert!(dir.path().join("lambda_0.06").join("checkpoint.jsonl").exists());

    assert_eq!(run(&["sweep-lambda", "--out", d]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    small_run(dir.path(), "14", "7");
    let mut args = vec!["train", "--out", d, "--epochs", "5", "--learning-rate", "1e300"];
    args.extend(MICRO);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
