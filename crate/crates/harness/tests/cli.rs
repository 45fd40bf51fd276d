//! End-to-end tests of the command-line surface: every subcommand, the
//! documented exit codes, and the on-disk artifact layout.

use std::path::Path;
use std::process::Output;

fn optlab(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_optlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const TRAIN_CFG: &str = "problem.kind = quadratic\n\
    problem.dim = 6\n\
    problem.cond = 20\n\
    optimizer.method = sassha\n\
    optimizer.eta = 0.1\n\
    optimizer.rho = 0.05\n\
    run.steps = 60\n\
    run.seeds = 1,2\n\
    run.eval_every = 30\n\
    run.sharpness = true\n\
    run.sharpness_mc = 10\n\
    run.trace_samples = 10\n";

#[test]
fn train_writes_records_checkpoints_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(&cfg, TRAIN_CFG);
    let out = dir.path().join("runs");

    let result = optlab(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());

    for seed in ["1", "2"] {
        let record = out.join(seed).join("record.csv");
        let text = std::fs::read_to_string(&record).unwrap();
        assert!(text.starts_with(
            "step,train_loss,eta,rho,update_norm,gc_count,hvp_count,val_loss,val_acc"
        ));
        assert_eq!(text.lines().count(), 61); // header + 60 steps
        assert!(out.join(seed).join("x.bin").exists());
        assert!(out.join(seed).join("sharpness.json").exists());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["rng"], "splitmix64");
    assert_eq!(manifest["config"]["optimizer.method"], "sassha");
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn seed_override_narrows_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(&cfg, TRAIN_CFG);
    let out = dir.path().join("runs");
    let result = optlab(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed-override",
        "9",
    ]);
    assert!(result.status.success());
    assert!(out.join("9").join("record.csv").exists());
    assert!(!out.join("1").exists());
}

#[test]
fn invalid_config_exits_one_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, &format!("{TRAIN_CFG}optimizer.bogus = 1\n"));
    let result = optlab(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("optimizer.bogus"), "stderr: {stderr}");
}

#[test]
fn unknown_subcommand_exits_one() {
    let result = optlab(&["frobnicate"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn all_diverged_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("explode.cfg");
    write(
        &cfg,
        "problem.kind = quadratic\n\
         problem.dim = 4\n\
         problem.cond = 100\n\
         problem.scale = 10\n\
         optimizer.method = sgd\n\
         optimizer.momentum = 0.0\n\
         optimizer.eta = 1e8\n\
         run.steps = 3000\n\
         run.seeds = 1\n",
    );
    let out = dir.path().join("runs");
    let result = optlab(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn sharpness_evaluates_a_saved_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(&cfg, TRAIN_CFG);
    let out = dir.path().join("runs");
    assert!(optlab(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());

    let ckpt = out.join("1").join("x.bin");
    let result = optlab(&[
        "sharpness",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&result.stdout).expect("sharpness prints JSON");
    assert!(report["lambda_max"].is_number());
    assert!(report["trace"].is_number());
    assert_eq!(report["rho"], 0.1);
}

#[test]
fn stability_prints_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ens.cfg");
    write(
        &cfg,
        "ensemble.count = 2\n\
         ensemble.mat.1 = 1\n\
         ensemble.prob.1 = 0.5\n\
         ensemble.mat.2 = 3\n\
         ensemble.prob.2 = 0.5\n\
         stability.eta = 0.1\n\
         stability.rho = 0.05\n\
         stability.epsilon = 0.5\n\
         stability.simulate = true\n\
         stability.steps = 100\n\
         stability.trajectories = 50\n",
    );
    let out = dir.path().join("stab");
    let result = optlab(&[
        "stability",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let report: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    // Hand moments for {1, 3}: s2 = sqrt(5 - 4) = 1.
    assert!((report["s2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["commuting"], true);
    assert!(out.join("surrogate_trajectory.csv").exists());
    assert!(out.join("stability.json").exists());
}

#[test]
fn toy_writes_basin_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mix.cfg");
    write(
        &cfg,
        "problem.kind = mixture\n\
         optimizer.method = sassha\n\
         optimizer.eta = 1.1\n\
         optimizer.rho = 0.3\n\
         optimizer.beta1 = 0.6\n\
         run.steps = 100\n\
         run.seeds = 1\n\
         toy.grid = 4\n\
         toy.range = 3.0\n",
    );
    let out = dir.path().join("sweep");
    let result = optlab(&[
        "toy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(out.join("toy.csv")).unwrap();
    assert!(text.starts_with("init_x0,init_x1,final_x0,final_x1,basin,trace,status"));
    assert_eq!(text.lines().count(), 17); // header + 16 grid cells
}

#[test]
fn cost_prints_the_model_table() {
    let result = optlab(&["cost"]);
    assert!(result.status.success());
    let text = String::from_utf8_lossy(&result.stdout);
    assert!(text.contains("method,k,gc_per_step,hvp_per_step,gc_equivalents"));
    assert!(text.contains("sassha,10,2,0.1,2.3"));
    assert!(text.contains("msassha,10,1,0.1,1.3"));
    assert!(text.contains("adahessian,1,1,1,4"));
    assert!(text.contains("adamw,1,1,0,1"));
}

#[test]
fn summary_aggregates_run_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(&cfg, TRAIN_CFG);
    let out = dir.path().join("runs");
    assert!(optlab(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());

    let result = optlab(&["summary", out.to_str().unwrap(), "--format", "json"]);
    assert!(result.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    let block = &parsed.as_array().unwrap()[0];
    assert_eq!(block["method"], "sassha");
    assert_eq!(block["n_completed"], 2);
    assert_eq!(block["n_diverged"], 0);
    assert!(block["val_loss"]["mean"].is_number());
}
