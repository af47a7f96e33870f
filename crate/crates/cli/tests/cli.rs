use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn prefnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefnet"))
        .current_dir(dir)
        .env_remove("PREFNET_SEED")
        .args(args)
        .output()
        .expect("spawn prefnet")
}

fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "{stdout}");
    serde_json::from_str(lines[0]).unwrap()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn gen_toy(dir: &Path) {
    let out = prefnet(
        dir,
        &[
            "gen-data",
            "--topology",
            "toy",
            "--horizon",
            "120",
            "--seed",
            "3",
            "--out",
            "data",
        ],
    );
    let s = summary(&out);
    assert_eq!(
        (s["train"].as_u64(), s["val"].as_u64(), s["test"].as_u64()),
        (Some(96), Some(12), Some(12))
    );
}

#[test]
fn pipeline_train_eval_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    gen_toy(dir);
    assert!(dir.join("data/manifest.json").exists());
    assert!(dir.join("data/topology.json").exists());

    let s = summary(&prefnet(
        dir,
        &[
            "train",
            "--data",
            "data",
            "--dist",
            "exp:60",
            "--iterations",
            "1",
            "--hidden",
            "4",
            "--steps",
            "1",
            "--out",
            "dp",
        ],
    ));
    assert_eq!(s["iterations"], 1);
    let log = std::fs::read_to_string(dir.join("dp/train_log.jsonl")).unwrap();
    let rec: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(rec["alpha_sampled"].as_array().unwrap().len(), 2);

    let s = summary(&prefnet(
        dir,
        &[
            "eval-static",
            "--data",
            "data",
            "--checkpoint",
            "dp/agent.ckpt",
            "--alphas",
            "0.01,0.02",
            "--out",
            "es",
        ],
    ));
    assert_eq!(
        (s["agents"].as_u64(), s["settings"].as_u64()),
        (Some(1), Some(2))
    );
    let csv = std::fs::read_to_string(dir.join("es/rewards.csv")).unwrap();
    assert!(csv.starts_with("agent,alpha=0.01,alpha=0.02\ndp,"), "{csv}");

    std::fs::write(
        dir.join("sc.json"),
        r#"{"events":[{"t":0,"kind":"set_alpha","value":0.01},{"t":4,"kind":"node_down","node":2}]}"#,
    )
    .unwrap();
    let s = summary(&prefnet(
        dir,
        &[
            "scenario",
            "--data",
            "data",
            "--checkpoint",
            "dp/agent.ckpt",
            "--scenario",
            "sc.json",
            "--alpha",
            "0.02",
            "--out",
            "sc",
        ],
    ));
    assert_eq!(s["steps"], 12);
    let steps: Vec<Value> = std::fs::read_to_string(dir.join("sc/steps.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(steps[0]["alpha"], 0.01);
    for s in &steps[4..] {
        assert_eq!(s["nodes"][2]["status"], "down");
        assert!(s["paths"]
            .as_array()
            .unwrap()
            .iter()
            .all(|p| !p.as_array().unwrap().contains(&2.into())));
    }
}

#[test]
fn fit_dist_recovers_rate_from_effects_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // V = 10·exp(-40·α), sampled without noise
    let samples: Vec<Value> = [0.0, 0.01, 0.02, 0.05, 0.1]
        .iter()
        .map(|&a: &f64| serde_json::json!({"preference": a, "effect": 10.0 * (-40.0 * a).exp()}))
        .collect();
    std::fs::write(
        dir.join("effects.json"),
        serde_json::to_string(&samples).unwrap(),
    )
    .unwrap();
    let s = summary(&prefnet(
        dir,
        &["fit-dist", "--effects", "effects.json", "--out", "fit"],
    ));
    let lambda = s["lambda"].as_f64().unwrap();
    assert!((lambda - 40.0).abs() < 1e-4, "{lambda}");
    let fit = read_json(dir.join("fit/fit.json"));
    assert_eq!(fit["samples"], 5);
    assert!(std::fs::read_to_string(dir.join("fit/dist.txt"))
        .unwrap()
        .starts_with("exp:"));
    // quantile of exp(λ) at q is -ln(1-q)/λ
    let table = std::fs::read_to_string(dir.join("fit/quantiles.csv")).unwrap();
    let q99: f64 = table
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (q99 - format!("{:.4}", -(0.01f64).ln() / 40.0)
            .parse::<f64>()
            .unwrap())
        .abs()
            < 1e-12
    );
}

#[test]
fn config_file_then_flags_then_env_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("cfg.toml"),
        "[gen-data]\ntopology = \"toy\"\nhorizon = 500\nseed = 11\n",
    )
    .unwrap();
    let s = summary(&prefnet(
        dir,
        &[
            "--config",
            "cfg.toml",
            "gen-data",
            "--horizon",
            "100",
            "--out",
            "a",
        ],
    ));
    assert_eq!(s["train"], 80);
    let m = read_json(dir.join("a/manifest.json"));
    assert_eq!(m["seed"], 11);
    assert_eq!(m["args"]["horizon"], 100);

    let out = Command::new(env!("CARGO_BIN_EXE_prefnet"))
        .current_dir(dir)
        .env("PREFNET_SEED", "5")
        .args([
            "gen-data",
            "--topology",
            "toy",
            "--horizon",
            "100",
            "--out",
            "b",
        ])
        .output()
        .unwrap();
    summary(&out);
    assert_eq!(read_json(dir.join("b/manifest.json"))["seed"], 5);
    let b = read_json(dir.join("b/meta.json"));
    assert_eq!(b["seed"], 5);
}

#[test]
fn same_seed_gives_identical_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for out in ["x", "y"] {
        summary(&prefnet(
            dir,
            &[
                "gen-data",
                "--topology",
                "toy",
                "--horizon",
                "100",
                "--seed",
                "9",
                "--out",
                out,
            ],
        ));
    }
    for f in ["train.jsonl", "val.jsonl", "test.jsonl", "meta.json"] {
        assert_eq!(
            std::fs::read(dir.join("x").join(f)).unwrap(),
            std::fs::read(dir.join("y").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.toml"), "[train]\nlearning_rate = 0.1\n").unwrap();

    let out = prefnet(
        dir,
        &["--config", "bad.toml", "train", "--data", "d", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    assert_eq!(
        prefnet(dir, &["train", "--data", "d", "--out", "o"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(prefnet(dir, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        prefnet(
            dir,
            &["train", "--data", "d", "--dist", "exp:-1", "--out", "o"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        prefnet(dir, &["gen-data", "--topology", "atlantis", "--out", "o"])
            .status
            .code(),
        Some(2)
    );

    // well-formed request, missing dataset
    let out = prefnet(
        dir,
        &[
            "train", "--data", "nowhere", "--dist", "exp:60", "--out", "o",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    assert_eq!(prefnet(dir, &["--help"]).status.code(), Some(0));
}
