//! Drives the installed binary end to end: generation round trips, solver
//! output, the train/eval/route/bench chain, manifest contracts, and the
//! one-line error format.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wdp-triage")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary should spawn")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).trim_end().to_string()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn kstar_generation_writes_certified_instances_and_a_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("kstar");
    run_ok(&[
        "generate", "--family", "kstar", "--k", "5", "--epsilon", "0.01",
        "--out", out.to_str().unwrap(),
    ]);

    let label = read_json(&out.join("instance_0000.label.json"));
    assert_eq!(label["tag"], "hard");
    let ratio = label["certificate"]["analytic_ratio"].as_f64().unwrap();
    assert_eq!(ratio, (1.0 + 0.01) / 5.0);
    let gap = label["greedy_gap"].as_f64().unwrap();
    assert_eq!(gap, (5.0 - 1.01) / 5.0);

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["tool"], "wdp-triage");
    assert_eq!(manifest["subcommand"], "generate");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["k"], 5);
    assert_eq!(manifest["failed_stage"], serde_json::Value::Null);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn count_zero_writes_only_the_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("empty");
    run_ok(&["generate", "--family", "kstar", "--count", "0", "--out", out.to_str().unwrap()]);
    let entries: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(entries, vec!["manifest.json".to_string()]);
}

#[test]
fn equal_flags_and_seed_reproduce_identical_instance_bytes() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (out, seed) in [(&a, "9"), (&b, "9"), (&c, "10")] {
        run_ok(&[
            "generate", "--family", "mixed", "--n-hard", "4", "--n-easy", "4",
            "--seed", seed, "--out", out.to_str().unwrap(),
        ]);
    }
    for i in 0..8 {
        let name = format!("instance_{i:04}.json");
        let bytes_a = std::fs::read(a.join(&name)).unwrap();
        let bytes_b = std::fs::read(b.join(&name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between equal-seed runs");
    }
    let first_a = std::fs::read(a.join("instance_0000.json")).unwrap();
    let first_c = std::fs::read(c.join("instance_0000.json")).unwrap();
    assert_ne!(first_a, first_c, "different seeds should give different instances");
}

#[test]
fn solver_output_matches_the_certificate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("kstar");
    run_ok(&[
        "generate", "--family", "kstar", "--k", "4", "--epsilon", "0.5",
        "--out", out.to_str().unwrap(),
    ]);
    let instance = out.join("instance_0000.json");

    let exact = run_ok(&["solve", "--instance", instance.to_str().unwrap(), "--solver", "exact"]);
    let solution: serde_json::Value = serde_json::from_slice(&exact.stdout).unwrap();
    assert_eq!(solution["welfare"].as_f64().unwrap(), 4.0);
    assert_eq!(solution["optimal"], true);
    assert_eq!(solution["accepted"].as_array().unwrap().len(), 4);

    let greedy = run_ok(&["solve", "--instance", instance.to_str().unwrap(), "--solver", "greedy"]);
    let solution: serde_json::Value = serde_json::from_slice(&greedy.stdout).unwrap();
    assert_eq!(solution["welfare"].as_f64().unwrap(), 1.5);
    assert_eq!(solution["accepted"], serde_json::json!([0]));
}

#[test]
fn feature_train_eval_route_bench_chain_produces_consistent_artifacts() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "generate", "--family", "mixed", "--n-hard", "30", "--n-easy", "30",
        "--seed", "11", "--out", data.to_str().unwrap(),
    ]);

    let feat = dir.path().join("feat");
    run_ok(&["features", "--dir", data.to_str().unwrap(), "--out", feat.to_str().unwrap()]);
    let csv = std::fs::read_to_string(feat.join("features.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("instance,cv_bid_density,"));
    assert!(header.ends_with(",greedy_gap"));
    assert_eq!(csv.lines().count(), 61);

    let model_dir = dir.path().join("model");
    let features_arg = feat.join("features.csv");
    run_ok(&[
        "train", "--features", features_arg.to_str().unwrap(),
        "--seed", "42", "--out", model_dir.to_str().unwrap(),
    ]);
    let model_path = model_dir.join("model.json");
    assert!(model_path.exists());

    let eval_dir = dir.path().join("eval");
    run_ok(&[
        "eval", "--model", model_path.to_str().unwrap(),
        "--features", features_arg.to_str().unwrap(),
        "--out", eval_dir.to_str().unwrap(),
    ]);
    let eval = read_json(&eval_dir.join("eval.json"));
    assert!(eval["mae"].as_f64().unwrap() < 0.15);
    let sweep = std::fs::read_to_string(eval_dir.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 18, "header plus the 17 grid points");

    let route_dir = dir.path().join("route");
    run_ok(&[
        "route", "--dir", data.to_str().unwrap(), "--selector", "learned",
        "--model", model_path.to_str().unwrap(), "--out", route_dir.to_str().unwrap(),
    ]);
    let report = read_json(&route_dir.join("route_report.json"));
    assert!(report["routing_accuracy"].as_f64().unwrap() > 0.8);
    let rows = std::fs::read_to_string(route_dir.join("route_instances.csv")).unwrap();
    assert!(rows.starts_with("instance,tag,decision,gap,cv,predicted_gap\n"));
    assert_eq!(rows.lines().count(), 61);

    let bench_dir = dir.path().join("bench");
    run_ok(&[
        "bench", "--dir", data.to_str().unwrap(),
        "--model", model_path.to_str().unwrap(),
        "--calibrate-dir", data.to_str().unwrap(),
        "--out", bench_dir.to_str().unwrap(),
    ]);
    let bundle = read_json(&bench_dir.join("hybrid.json"));
    let methods = bundle["methods"].as_object().unwrap();
    for name in ["greedy_only", "exact_only", "hybrid_cv", "hybrid_learned", "hybrid_oracle"] {
        assert!(methods.contains_key(name), "missing method {name}");
    }
    assert_eq!(methods["hybrid_oracle"]["routing_accuracy"].as_f64().unwrap(), 1.0);
    let greedy_gap = methods["greedy_only"]["overall_gap_mean"].as_f64().unwrap();
    let hybrid_gap = methods["hybrid_cv"]["overall_gap_mean"].as_f64().unwrap();
    assert!(hybrid_gap <= greedy_gap);
    let instances = std::fs::read_to_string(bench_dir.join("hybrid_instances.csv")).unwrap();
    assert_eq!(instances.lines().count(), 1 + 5 * 60);
}

#[test]
fn pipeline_abort_names_the_failing_stage_in_the_manifest() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, "[route]\nmodel = \"/nonexistent/model.json\"\n").unwrap();
    let out = dir.path().join("pipe");
    let result = run(&[
        "pipeline", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    let line = stderr_line(&result);
    assert!(line.starts_with("error[E_PIPELINE]: stage 'bench':"), "got: {line}");
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["failed_stage"], "bench");
}

#[test]
fn errors_are_one_line_with_stable_codes() {
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["solve", "--instance", "/nonexistent.json", "--solver", "exact"], "error[E_IO]:"),
        (vec!["generate", "--family", "bogus", "--out", "/tmp/wdp_bogus_family"], "error[E_CONFIG]:"),
        (vec!["generate", "--family", "kstar", "--k", "1", "--out", "/tmp/wdp_bogus_k"], "error[E_CONFIG]:"),
    ];
    for (args, prefix) in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
        let text = stderr_line(&out);
        assert!(text.starts_with(prefix), "args {args:?}: got '{text}'");
        assert!(!text.contains('\n'), "stderr must be a single line");
    }

    // The learned selector demands a model up front.
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "generate", "--family", "kstar", "--count", "2", "--out", data.to_str().unwrap(),
    ]);
    let out = run(&[
        "route", "--dir", data.to_str().unwrap(), "--selector", "learned",
        "--out", dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[E_CONFIG]:"));
}

#[test]
fn thread_cap_env_var_is_validated_but_never_changes_bytes() {
    let dir = TempDir::new().unwrap();
    let bad = Command::new(bin())
        .env("WDP_TRIAGE_THREADS", "zero please")
        .args(["generate", "--family", "kstar", "--out", dir.path().join("x").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr_line(&bad).starts_with("error[E_CONFIG]:"));

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let status = Command::new(bin())
            .env("WDP_TRIAGE_THREADS", threads)
            .args([
                "generate", "--family", "mixed", "--n-hard", "6", "--n-easy", "6",
                "--seed", "3", "--out", out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for i in 0..12 {
        let name = format!("instance_{i:04}.label.json");
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name} depends on the worker count"
        );
    }
}

#[test]
fn partial_labels_are_rejected_by_features() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "generate", "--family", "kstar", "--count", "3", "--out", data.to_str().unwrap(),
    ]);
    std::fs::remove_file(data.join("instance_0001.label.json")).unwrap();
    let out = run(&[
        "features", "--dir", data.to_str().unwrap(),
        "--out", dir.path().join("feat").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[E_INSTANCE]:"));
}
