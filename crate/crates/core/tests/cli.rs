use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn polarlab(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_polarlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("POLARLAB_OUT")
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--n",
        "3",
        "--beta",
        "1",
        "--seed",
        "7",
        "--max-events",
        "1000",
    ];
    assert_eq!(polarlab(&args, dir.path()), 0);

    let text = fs::read_to_string(dir.path().join("trajectory.jsonl")).unwrap();
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["N"], 3);
    assert_eq!(header["seed"], 7);
    assert_eq!(lines.count(), 1000);

    let m = json(&dir.path().join("manifest.json"));
    for key in [
        "command",
        "config",
        "seed",
        "start",
        "results_files",
        "pass_flags",
        "version",
    ] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["start"], serde_json::json!([0, 0, 0]));
    assert!(m["results_files"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f == "trajectory.jsonl"));
    assert!(m["pass_flags"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v == true));
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--beta",
        "2",
        "--seed",
        "11",
        "--max-events",
        "500",
        "--format",
        "both",
    ];
    assert_eq!(polarlab(&args, a.path()), 0);
    assert_eq!(polarlab(&args, b.path()), 0);
    for f in ["trajectory.jsonl", "events.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }

    let args = ["consensus", "--beta", "1,2", "--reps", "300", "--seed", "3"];
    assert_eq!(polarlab(&args, a.path()), polarlab(&args, b.path()));
    for f in ["replications.csv", "consensus.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn greedy_check_passes_at_n3_cap4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        polarlab(&["greedy-check", "--n", "3", "--cap", "4"], dir.path()),
        0
    );
    let r = json(&dir.path().join("lemma_report.json"));
    assert_eq!(r["all_pass"], true);
    assert_eq!(r["n_states_checked"], 217);
    assert!(r["counterexample"].is_null());
}

#[test]
fn metastable_reports_summary_and_exit_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "metastable",
        "--n",
        "3",
        "--beta",
        "1.5",
        "--reps",
        "2000",
        "--seed",
        "42",
    ];
    let code = polarlab(&args, dir.path());

    let csv = fs::read_to_string(dir.path().join("hitting_times.csv")).unwrap();
    assert!(csv.starts_with("spec_hash,seed,cell,replication,value,censored\n"));
    assert_eq!(csv.lines().count(), 2001);

    let s = json(&dir.path().join("summary.json"));
    let e = &s["estimates"][0];
    assert!(e["summary"]["ks_exp1"].as_f64().unwrap() > 0.0);
    assert!(e["c_hat"].as_f64().unwrap() > 0.0);
    assert_eq!(e["bound_ok"], true);

    let m = json(&dir.path().join("manifest.json"));
    let all = m["pass_flags"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v == true);
    assert_eq!(code, if all { 0 } else { 1 });
    assert_eq!(m["config"]["target"], "L-");
}

#[test]
fn svg_histogram_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["metastable", "--beta", "2", "--reps", "200", "--svg"];
    polarlab(&args, dir.path());
    let svg = fs::read_to_string(dir.path().join("hist_beta2.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(polarlab(&["simulate", "--bogus", "1"], dir.path()), 2);
    assert_eq!(polarlab(&["simulate", "--beta", "-1"], dir.path()), 2);
    assert_eq!(polarlab(&["simulate", "--n", "2"], dir.path()), 2);
    assert_eq!(polarlab(&["simulate", "--start", "1,2,3"], dir.path()), 2);
    assert_eq!(polarlab(&["teleport"], dir.path()), 2);

    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    assert_eq!(polarlab(&["greedy-check"], &file.join("sub")), 2);
}

#[test]
fn env_var_overrides_out_flag() {
    let flag_dir = tempfile::tempdir().unwrap();
    let env_dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_polarlab"))
        .args(["greedy-check", "--out"])
        .arg(flag_dir.path())
        .env("POLARLAB_OUT", env_dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(env_dir.path().join("manifest.json").exists());
    assert!(!flag_dir.path().join("manifest.json").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# oracle run\nn = 3\nbeta = 0.5,1\ncap = 2\nseed = 5\n",
    )
    .unwrap();
    let args = [
        "oracle-check",
        "--config",
        cfg.to_str().unwrap(),
        "--cap",
        "3",
    ];
    assert_eq!(polarlab(&args, dir.path()), 0);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["cap"], 3);
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["beta"], serde_json::json!([0.5, 1.0]));
    assert!(dir.path().join("triplets_beta0.5.csv").exists());

    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(
        polarlab(
            &["oracle-check", "--config", cfg.to_str().unwrap()],
            dir.path()
        ),
        2
    );
}
