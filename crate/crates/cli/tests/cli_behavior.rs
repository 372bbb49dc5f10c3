//! End-to-end CLI behavior: exit codes, artifact layout, determinism and the
//! file-format surfaces.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexi-morl"))
}

static DIR_SEQ: AtomicU64 = AtomicU64::new(0);

fn temp_dir(tag: &str) -> PathBuf {
    let n = DIR_SEQ.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!(
        "lexi-morl-test-{}-{tag}-{n}",
        std::process::id()
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    let config = serde_json::json!({
        "grid": { "height": 12, "width": 9, "cell_m": 0.5 },
        "env": {
            "dt": 0.1, "v_ref": 8.0, "v_hard_cap": 15.0,
            "max_pedestrians": 6, "vicinity_radius": 35.0, "despawn_radius": 40.0,
            "crossing_factor": 0.8, "step_cap": 300,
            "ped_speed_min": 0.4, "ped_speed_max": 1.2, "ped_radius": 0.3,
            "heading_noise_deg": 5.0, "ego_length": 4.5, "ego_width": 2.0,
            "min_spawn_distance": 5.0,
            "safety": { "collision_penalty": -4.0, "max_decel": 5.0,
                         "min_safety_distance": 2.0, "shape": "literal_negated" }
        },
        "reward": { "speed_mode": "corrected" },
        "train": {
            "total_steps": 600, "gamma": 0.99, "batch_size": 32,
            "target_sync_every": 200, "warmup": 150, "train_every": 4,
            "lr_safety": 0.00025, "lr_speed": 0.0025,
            "eps_safety": { "start": 0.9, "end": 0.3, "decay_steps": 500 },
            "eps_speed": { "start": 0.8, "end": 0.1, "decay_steps": 500 },
            "thresholds": [0.95, 0.95], "threshold_mode": "literal",
            "loss": "mse", "checkpoint_every": 300, "seed": 7
        }
    });
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn help_exists_for_all_subcommands() {
    for sub in ["train", "eval", "compare", "trace", "map", "selftest"] {
        let out = run(bin().args([sub, "--help"]));
        assert!(out.status.success(), "{sub} --help failed");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(bin().args(["train", "--mode", "morl", "--out", "/tmp/x"]));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn unreadable_config_is_a_data_error() {
    let dir = temp_dir("badcfg");
    let out = run(bin().args([
        "train",
        "--mode",
        "morl",
        "--config",
        "/nonexistent/config.json",
        "--out",
        dir.to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_produces_all_artifact_kinds_and_is_seed_deterministic() {
    let dir = temp_dir("train");
    let config = write_tiny_config(&dir);
    let run_once = |out_dir: &Path, seed: &str| {
        let out = run(bin().args([
            "train",
            "--mode",
            "morl",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out_dir.to_str().unwrap(),
        ]));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let run_a = dir.join("a");
    let run_b = dir.join("b");
    let run_c = dir.join("c");
    run_once(&run_a, "7");
    run_once(&run_b, "7");
    run_once(&run_c, "8");

    for d in [&run_a, &run_b, &run_c] {
        assert!(d.join("manifest.json").is_file());
        assert!(d.join("train_log.jsonl").is_file());
        assert!(d.join("checkpoint_final.bin").is_file());
        assert!(d.join("checkpoints").join("step_00000300.bin").is_file());
        assert!(d.join("checkpoints").join("step_00000600.bin").is_file());
    }

    // identical seeds: byte-identical checkpoints and logs
    let bytes = |p: PathBuf| fs::read(p).unwrap();
    assert_eq!(
        bytes(run_a.join("checkpoint_final.bin")),
        bytes(run_b.join("checkpoint_final.bin"))
    );
    assert_eq!(bytes(run_a.join("train_log.jsonl")), bytes(run_b.join("train_log.jsonl")));
    // a different seed diverges
    assert_ne!(
        bytes(run_a.join("checkpoint_final.bin")),
        bytes(run_c.join("checkpoint_final.bin"))
    );

    // the log holds exactly total_steps step records
    let log = fs::read_to_string(run_a.join("train_log.jsonl")).unwrap();
    let steps = log.lines().filter(|l| l.starts_with(r#"{"type":"step""#)).count();
    assert_eq!(steps, 600);

    // manifest carries the resolved config and the seed override
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["train"]["total_steps"], 600);
    assert!(manifest["code_version"].as_str().unwrap().len() >= 8);

    // evaluating the trained checkpoint works end to end
    let report = dir.join("report.json");
    let out = run(bin().args([
        "eval",
        "--checkpoint",
        run_a.join("checkpoint_final.bin").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        "3",
        "--seed",
        "5",
        "--report",
        report.to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report.is_file());
    assert!(dir.join("report.csv").is_file());
}

#[test]
fn corrupt_checkpoint_is_a_checksum_data_error() {
    let dir = temp_dir("corrupt");
    let config = write_tiny_config(&dir);
    let out_dir = dir.join("run");
    let out = run(bin().args([
        "train",
        "--mode",
        "sorl",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let ckpt = out_dir.join("checkpoint_final.bin");
    let mut bytes = fs::read(&ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    fs::write(&ckpt, bytes).unwrap();

    let out = run(bin().args([
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--episodes",
        "1",
        "--report",
        dir.join("r.json").to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn scripted_policy_eval_and_csv_schema() {
    let dir = temp_dir("scripted");
    let config = write_tiny_config(&dir);
    let report = dir.join("brake.json");
    let out = run(bin().args([
        "eval",
        "--policy",
        "brake",
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        "4",
        "--seed",
        "3",
        "--report",
        report.to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let agg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(agg["policy"], "brake");
    assert_eq!(agg["n_episodes"], 4);
    assert_eq!(agg["rows"][0]["name"], "Collision Free Episodes (%)");
    assert_eq!(agg["rows"][0]["value"], 100.0);
    assert_eq!(agg["rows"][1]["value"], 0.0);
    assert_eq!(agg["rows"][4]["value"], 0.0);

    let csv = fs::read_to_string(dir.join("brake.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "metric,value,half_width");
    assert_eq!(lines[1], "Episodes (N),4,");
    assert_eq!(lines.len(), 11);

    // zero-episode evaluation: empty report, no division errors
    let empty = dir.join("empty.json");
    let out = run(bin().args([
        "eval",
        "--policy",
        "brake",
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        "0",
        "--report",
        empty.to_str().unwrap(),
    ]));
    assert!(out.status.success());
    let agg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&empty).unwrap()).unwrap();
    assert_eq!(agg["n_episodes"], 0);
    assert!(agg["rows"][0]["value"].is_null());
}

#[test]
fn compare_marks_directions() {
    let dir = temp_dir("compare");
    let config = write_tiny_config(&dir);
    for (policy, name) in [("brake", "a.json"), ("accelerate", "b.json")] {
        let out = run(bin().args([
            "eval",
            "--policy",
            policy,
            "--config",
            config.to_str().unwrap(),
            "--episodes",
            "5",
            "--seed",
            "2",
            "--report",
            dir.join(name).to_str().unwrap(),
        ]));
        assert!(out.status.success());
    }
    let csv = dir.join("cmp.csv");
    let out = run(bin().args([
        "compare",
        "--a",
        dir.join("a.json").to_str().unwrap(),
        "--b",
        dir.join("b.json").to_str().unwrap(),
        "--out-csv",
        csv.to_str().unwrap(),
    ]));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("Collision Free Episodes (%)"));
    let csv = fs::read_to_string(csv).unwrap();
    // braking wins the collision metric, accelerating wins average speed
    assert!(csv.lines().any(|l| l.starts_with("Collision Free Episodes (%)") && l.ends_with(",a")));
    assert!(csv.lines().any(|l| l.starts_with("Average Speed (m/s)") && l.ends_with(",b")));
}

#[test]
fn trace_command_renders_and_validates() {
    let dir = temp_dir("trace");
    let config = write_tiny_config(&dir);
    let traces = dir.join("traces");
    let out = run(bin().args([
        "eval",
        "--policy",
        "maintain",
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        "1",
        "--seed",
        "2",
        "--report",
        dir.join("r.json").to_str().unwrap(),
        "--trace-dir",
        traces.to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace_file = traces.join("ep_0000.jsonl");
    assert!(trace_file.is_file());

    let out = run(bin().args(["trace", "--episode", trace_file.to_str().unwrap()]));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("#0"));

    // empty trace: graceful empty output
    let empty = dir.join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = run(bin().args(["trace", "--episode", empty.to_str().unwrap()]));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("empty trace"));

    // corrupted nesting: flagged as a data error
    let corrupt = dir.join("corrupt.jsonl");
    let record = serde_json::json!({
        "step": 0, "action": "Brake",
        "q_rows": [[0.0, 0.0, 0.0, 0.0]],
        "selection": { "sets": [[0, 1], [0, 2]], "explored": null, "chosen": 0 },
        "reward": { "safety": 0.0, "speed": -1.0 },
        "v": 0.0, "event": "Clear", "done": false, "reason": null,
        "distance": 0.0, "in_intersection": false, "nearest_front_crossing": null
    });
    fs::write(&corrupt, format!("{record}\n")).unwrap();
    let out = run(bin().args(["trace", "--episode", corrupt.to_str().unwrap()]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("monotone"));
}

#[test]
fn map_command_writes_loadable_maps() {
    let dir = temp_dir("map");
    let config = write_tiny_config(&dir);
    for name in ["train", "heldout1", "heldout2"] {
        let path = dir.join(format!("{name}.json"));
        let out = run(bin().args(["map", "--name", name, "--out", path.to_str().unwrap()]));
        assert!(out.status.success());
        let map: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(map["name"], name);
    }
    // a generated map file round-trips through --map-file
    let out = run(bin().args([
        "eval",
        "--policy",
        "brake",
        "--config",
        config.to_str().unwrap(),
        "--map-file",
        dir.join("heldout1.json").to_str().unwrap(),
        "--episodes",
        "1",
        "--report",
        dir.join("r.json").to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // malformed map: configuration error -> data exit code
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"name":"x","segments":[],"intersections":[],"crosswalks":[],"route":[],"sidewalk_width":2.0}"#).unwrap();
    let out = run(bin().args([
        "eval",
        "--policy",
        "brake",
        "--config",
        config.to_str().unwrap(),
        "--map-file",
        bad.to_str().unwrap(),
        "--episodes",
        "1",
        "--report",
        dir.join("r2.json").to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_fast_passes_and_fault_injection_fails() {
    let out = run(bin().args(["selftest", "--fast"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS] tlo-oracle"));
    assert!(text.contains("[PASS] rewards"));
    assert!(text.contains("[PASS] gradcheck"));
    assert!(!text.contains("toy-mdp"), "--fast must skip the convergence suite");

    let out = run(bin().args(["selftest", "--fast", "--inject-fault", "tlo-strict"]));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL] tlo-oracle"));
}
