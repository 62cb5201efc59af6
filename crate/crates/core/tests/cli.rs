use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn msplace(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msplace"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MSPLACE_OUT_DIR")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const FORCED_SPLIT: &str = r#"{
  "infrastructure": {
    "servers": [{"id": 0, "cpu": 1, "mem": 1}, {"id": 1, "cpu": 1, "mem": 1}],
    "full_mesh": true,
    "mesh_capacity": 10000
  },
  "procedures": [{
    "id": 0,
    "ms": [
      {"id": 0, "cpu": 1, "mem": 1, "load": 1, "remote_penalty_s": 0.0005},
      {"id": 1, "cpu": 1, "mem": 1, "load": 1, "remote_penalty_s": 0.0005}
    ],
    "edges": [{"src": 0, "dst": 1, "base_time_s": 0.001}]
  }],
  "workload": [{"procedure": 0, "requests": 1}]
}"#;

#[test]
fn every_solver_writes_a_valid_assignment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), FORCED_SPLIT).unwrap();
    for solver in ["mm", "exact", "oracle"] {
        let out = format!("{solver}.json");
        let run = msplace(&["solve", "--scenario", "s.json", "--solver", solver, "--out", &out], dir.path());
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
        let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(&out)).unwrap()).unwrap();
        let psi = file["psi"].as_f64().unwrap();
        assert!((psi - 2000.0 / 3.0).abs() < 1e-9, "{solver}: {psi}");
        assert_eq!(file["assignment"].as_array().unwrap().len(), 2);

        let check = msplace(&["validate", "--scenario", "s.json", "--assignment", &out], dir.path());
        assert_eq!(code(&check), 0);
        assert_eq!(stdout(&check).lines().filter(|l| l.starts_with("pass ")).count(), 4);
    }
}

#[test]
fn trace_is_line_delimited_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), FORCED_SPLIT).unwrap();
    let run = msplace(
        &["solve", "--scenario", "s.json", "--out", "a.json", "--trace", "logs/t.jsonl"],
        dir.path(),
    );
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(dir.path().join("logs/t.jsonl")).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let record: Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["procedure"], 0);
    }
}

#[test]
fn violations_and_duplicates_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), FORCED_SPLIT).unwrap();
    let colocated = r#"[{"procedure":0,"ms":0,"replica":0,"server":0},{"procedure":0,"ms":1,"replica":0,"server":0}]"#;
    std::fs::write(dir.path().join("bad.json"), colocated).unwrap();
    let run = msplace(&["validate", "--scenario", "s.json", "--assignment", "bad.json"], dir.path());
    assert_eq!(code(&run), 1);
    assert!(stdout(&run).contains("FAIL resource capacity"));

    let duplicate = r#"[{"procedure":0,"ms":0,"replica":0,"server":0},{"procedure":0,"ms":0,"replica":0,"server":1},{"procedure":0,"ms":1,"replica":0,"server":1}]"#;
    std::fs::write(dir.path().join("dup.json"), duplicate).unwrap();
    let run = msplace(&["validate", "--scenario", "s.json", "--assignment", "dup.json"], dir.path());
    assert_eq!(code(&run), 1);
    assert!(stdout(&run).contains("FAIL unique placement"));
}

#[test]
fn infeasible_scenarios_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = FORCED_SPLIT.replace(r#""cpu": 1, "mem": 1}, {"id": 1, "cpu": 1"#, r#""cpu": 0.5, "mem": 1}, {"id": 1, "cpu": 0.5"#);
    std::fs::write(dir.path().join("s.json"), tiny).unwrap();
    for solver in ["mm", "exact"] {
        let run = msplace(&["solve", "--scenario", "s.json", "--solver", solver, "--out", "a.json"], dir.path());
        assert_eq!(code(&run), 1, "{solver}");
    }
    assert!(!dir.path().join("a.json").exists());
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"infrastructure": {"servers": []}, "extra": 1}"#).unwrap();
    let run = msplace(&["solve", "--scenario", "bad.json", "--out", "a.json"], dir.path());
    assert_eq!(code(&run), 2);
    let run = msplace(&["solve", "--scenario", "missing.json", "--out", "a.json"], dir.path());
    assert_eq!(code(&run), 2);
    let run = msplace(&["solve", "--solver", "cplex"], dir.path());
    assert_eq!(code(&run), 2);
}

#[test]
fn generated_scenarios_round_trip_through_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let run = msplace(
        &["generate", "--kind", "random", "--ms-count", "7", "--pi", "0.5", "--seed", "4", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&run), 0);
    let run = msplace(&["solve", "--scenario", "r.json", "--solver", "exact", "--out", "a.json"], dir.path());
    assert_eq!(code(&run), 0);

    for arch in ["ms", "nf", "procedure"] {
        let out = format!("{arch}.json");
        let run = msplace(
            &["generate", "--kind", "5gc", "--servers", "20", "--u-hat", "10", "--architecture", arch, "--out", &out],
            dir.path(),
        );
        assert_eq!(code(&run), 0);
        let scenario: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(&out)).unwrap()).unwrap();
        assert_eq!(scenario["procedures"].as_array().unwrap().len(), 3);
        let run = msplace(&["solve", "--scenario", &out, "--out", "a.json"], dir.path());
        assert_eq!(code(&run), 0, "{arch}");
    }
}

#[test]
fn experiment_writes_csv_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cg.json"),
        r#"{"ms_counts": [6], "server_ratios": [0.75], "edge_probabilities": [0.5], "homogeneities": ["homogeneous"]}"#,
    )
    .unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_msplace"))
        .args(["experiment", "--kind", "cost-gap", "--config", "cg.json", "--iterations", "3", "--no-timings"])
        .current_dir(dir.path())
        .env("MSPLACE_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let out = dir.path().join("from_env");
    let csv = std::fs::read_to_string(out.join("cost_gap_homogeneous.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let config: Value = serde_json::from_str(&std::fs::read_to_string(out.join("cost_gap_config.json")).unwrap()).unwrap();
    assert_eq!(config["iterations"], 3);
    assert_eq!(config["timings"], false);

    std::fs::write(dir.path().join("bad.json"), r#"{"itterations": 3}"#).unwrap();
    let run = msplace(&["experiment", "--kind", "cost-gap", "--config", "bad.json"], dir.path());
    assert_eq!(code(&run), 2);
}
