use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biovolt(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_biovolt"));
    for (k, _) in std::env::vars() {
        if k.starts_with("BIOVOLT_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = biovolt(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_logs_one_record_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&[
        "simulate",
        "--policy",
        "constant:-0.06",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    let records = lines(&out.join("episode_000.jsonl"));
    let steps: Vec<&Value> = records.iter().filter(|r| r["kind"] == "step").collect();
    let scenario = biovolt::env::Scenario::<f64>::cell_homeostasis();
    assert_eq!(steps.len(), scenario.horizon);
    for (i, s) in steps.iter().enumerate() {
        assert_eq!(s["step"], i);
    }
    assert_eq!(records[0]["kind"], "header");
    assert_eq!(records[0]["config_digest"], scenario.digest());
    assert_eq!(manifest(&out)["seed"], 4);
}

#[test]
fn rerun_with_logged_seed_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&[
        "simulate",
        "--scenario",
        "heart-recovery",
        "--policy",
        "random",
        "--out",
        a.to_str().unwrap(),
        "-q",
    ]);
    let seed = manifest(&a)["seed"].as_u64().unwrap().to_string();
    ok(&[
        "simulate",
        "--scenario",
        "heart-recovery",
        "--policy",
        "random",
        "--seed",
        &seed,
        "--out",
        b.to_str().unwrap(),
        "-q",
    ]);
    let read = |d: &Path| std::fs::read(d.join("summary.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let log = |d: &Path| std::fs::read(d.join("episode_000.jsonl")).unwrap();
    assert_eq!(log(&a), log(&b));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = |args: &[&str]| biovolt(args).status.code();
    assert_eq!(
        code(&["simulate", "--policy", "checkpoint:/does/not/exist", "--out", out]),
        Some(4)
    );
    assert_eq!(
        code(&["simulate", "--scenario", "no-such-scenario", "--out", out]),
        Some(3)
    );
    assert_eq!(
        code(&["simulate", "--set", "scenario.horizon=0", "--out", out]),
        Some(3)
    );
    assert_eq!(code(&["simulate", "--set", "train.tau=0", "--out", out]), Some(3));
    assert_eq!(code(&["frobnicate"]), Some(2));
    let stderr = String::from_utf8(biovolt(&["eval", "--checkpoint", "/nope", "--out", out]).stderr).unwrap();
    assert!(stderr.contains("/nope"), "{stderr}");
}

#[test]
fn environment_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = Command::new(env!("CARGO_BIN_EXE_biovolt"))
        .env("BIOVOLT_SCENARIO__HORIZON", "5")
        .args(["simulate", "--seed", "1", "-q", "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let steps = lines(&out.join("episode_000.jsonl"))
        .iter()
        .filter(|r| r["kind"] == "step")
        .count();
    assert_eq!(steps, 5);
    // --set wins over the environment
    let out2 = dir.path().join("run2");
    let status = Command::new(env!("CARGO_BIN_EXE_biovolt"))
        .env("BIOVOLT_SCENARIO__HORIZON", "5")
        .args([
            "simulate",
            "--seed",
            "1",
            "-q",
            "--set",
            "scenario.horizon=3",
            "--out",
            out2.to_str().unwrap(),
        ])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let steps = lines(&out2.join("episode_000.jsonl"))
        .iter()
        .filter(|r| r["kind"] == "step")
        .count();
    assert_eq!(steps, 3);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[run]\nseed = 9\nepisodes = 2\n\n[scenario]\nhorizon = 4\n").unwrap();
    let out = dir.path().join("run");
    ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    let m = manifest(&out);
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["scenario"]["horizon"], 4);
    assert!(out.join("episode_001.jsonl").exists());
}

#[test]
fn eval_of_a_fresh_checkpoint_is_finite() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    ok(&[
        "train",
        "--seed",
        "2",
        "--steps",
        "20",
        "--set",
        "train.warmup=20",
        "--set",
        "train.eval_seeds=[5]",
        "--out",
        train.to_str().unwrap(),
        "-q",
    ]);
    let eval = dir.path().join("eval");
    let stdout = ok(&[
        "eval",
        "--checkpoint",
        train.join("best.ckpt").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
    ]);
    assert!(stdout.contains("policy mean return"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(eval.join("eval.json")).unwrap()).unwrap();
    assert!(report["mean_return"].as_f64().unwrap().is_finite());
}

#[test]
fn saved_trainer_state_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    let out = train.to_str().unwrap();
    let args = [
        "train",
        "--seed",
        "4",
        "--steps",
        "400",
        "--set",
        "train.warmup=100",
        "--set",
        "train.eval_every=200",
        "--set",
        "train.eval_seeds=[1000]",
        "--out",
        out,
        "-q",
    ];
    ok(&args);
    let curve = std::fs::read(train.join("curve.csv")).unwrap();
    let best = std::fs::read(train.join("best.ckpt")).unwrap();
    let ckpt = train.join("trainer.ckpt");
    ok(&["train", "--resume", ckpt.to_str().unwrap(), "--out", out, "-q"]);
    assert_eq!(std::fs::read(train.join("curve.csv")).unwrap(), curve);
    assert_eq!(std::fs::read(train.join("best.ckpt")).unwrap(), best);
}

#[test]
fn trained_policy_beats_random_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    ok(&[
        "train",
        "--seed",
        "0",
        "--steps",
        "4000",
        "--set",
        "train.eval_every=1000",
        "--set",
        "train.eval_seeds=[1000,1001,1002]",
        "--out",
        train.to_str().unwrap(),
        "-q",
    ]);
    let eval = dir.path().join("eval");
    ok(&[
        "eval",
        "--checkpoint",
        train.join("best.ckpt").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
        "-q",
    ]);
    let trained = manifest(&eval)["result"]["mean_return"].as_f64().unwrap();
    let sim = dir.path().join("random");
    ok(&[
        "simulate",
        "--policy",
        "random",
        "--seed",
        "1000",
        "--episodes",
        "3",
        "--out",
        sim.to_str().unwrap(),
        "-q",
    ]);
    let returns = manifest(&sim)["result"]["returns"].clone();
    let returns: Vec<f64> = serde_json::from_value(returns).unwrap();
    let random = returns.iter().sum::<f64>() / returns.len() as f64;
    assert!(trained > random, "trained {trained} vs random {random}");
}

#[test]
fn causal_with_empty_set_reports_conditionals() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&[
        "simulate",
        "--scenario",
        "heart-recovery",
        "--policy",
        "random",
        "--seed",
        "3",
        "--episodes",
        "2",
        "--out",
        sim.to_str().unwrap(),
        "-q",
    ]);
    let logs = [sim.join("episode_000.jsonl"), sim.join("episode_001.jsonl")];
    let out = dir.path().join("causal");
    let stdout = ok(&[
        "causal",
        "--log",
        logs[0].to_str().unwrap(),
        "--log",
        logs[1].to_str().unwrap(),
        "--x",
        "A",
        "--y",
        "Behaviours",
        "--var",
        "A=/observables/action_mean:-0.03",
        "--var",
        "Behaviours=/observables/apoptotic:0.5",
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    let mut counts = [[0usize; 2]; 2];
    for log in &logs {
        for r in lines(log).iter().filter(|r| r["kind"] == "step") {
            let a = (r["observables"]["action_mean"].as_f64().unwrap() > -0.03) as usize;
            let b = (r["observables"]["apoptotic"].as_f64().unwrap() > 0.5) as usize;
            counts[a][b] += 1;
        }
    }
    let csv = std::fs::read_to_string(out.join("causal.csv")).unwrap();
    assert_eq!(csv, stdout);
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        let a: usize = f[0].trim_start_matches("A=").parse().unwrap();
        let b: usize = f[1].trim_start_matches("Behaviours=").parse().unwrap();
        let expected = counts[a][b] as f64 / (counts[a][0] + counts[a][1]) as f64;
        assert_eq!(f[2].parse::<f64>().unwrap(), expected, "{row}");
    }
}
