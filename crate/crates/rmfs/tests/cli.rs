use std::path::Path;
use std::process::{Command, Output};

fn rmfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmfs")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
[layout]
aisles = 3
cross_aisles = 3
storage_locations = 128
pods = 109

[scenario]
sku_count = 100

[run]
horizon = 900.0
seed = 11

[plan]
rcs = "benchmarks"
repetitions = 1
seed = 3
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn bound_prints_case_one_value() {
    let o = rmfs(&["bound", "--stations", "2", "--t-pick", "8", "--t-move-up", "7", "--t-handle", "15"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "480");
    let o = rmfs(&["bound", "--stations", "2", "--t-pick", "8", "--t-move-up", "12", "--t-handle", "15", "--ipo", "3"]);
    assert_eq!(stdout(&o).trim(), "432");
}

#[test]
fn enumerate_lists_everything() {
    let o = rmfs(&["enumerate", "--rcs"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1620);
    assert_eq!(text.lines().next(), Some("CommonLines/PodBatch/Age/Class/Class"));
    assert_eq!(stdout(&rmfs(&["enumerate", "--ws"])).lines().count(), 360);
    assert!(!rmfs(&["enumerate"]).status.success());
}

#[test]
fn run_is_reproducible() {
    let a = rmfs(&["run", "--preset", "phase1-micro", "--seed", "7"]);
    let b = rmfs(&["run", "--preset", "phase1-micro", "--seed", "7"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    assert!(v["metrics"]["unit_throughput"].as_f64().unwrap() > 0.0);
}

#[test]
fn run_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let trace = dir.path().join("trace.tsv");
    let out = dir.path().join("out");
    let o = rmfs(&["run", "--config", &cfg, "--trace", trace.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().any(|l| l.contains("\tpick ")));
    assert!(lines.lines().all(|l| l.split('\t').count() == 2));
    let saved = std::fs::read_to_string(out.join("metrics.json")).unwrap();
    assert_eq!(saved, stdout(&o));
}

#[test]
fn unknown_key_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[layout]\naisles = 3\nasles = 4\n");
    let o = rmfs(&["run", "--config", &cfg]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("asles") && err.contains("line 3"), "{err}");
}

#[test]
fn missing_file_fails() {
    let o = rmfs(&["run", "--config", "/nonexistent/run.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/nonexistent/run.toml"));
    assert!(!rmfs(&["summarize", "/nonexistent/results.csv"]).status.success());
    assert!(!rmfs(&["plan", "--preset", "no-such-preset"]).status.success());
}

#[test]
fn plan_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("res");
    let o = rmfs(&["plan", "--config", &cfg, "--out", out.to_str().unwrap(), "--parallelism", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().next().unwrap().starts_with("poa,roa,pps,rps,psa,pick_stations"));

    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"], 6);
    assert_eq!(summary["problems"].as_array().unwrap().len(), 5);
    assert_eq!(summary["correlation"].as_array().unwrap().len(), 8);

    let again = rmfs(&["summarize", out.join("results.csv").to_str().unwrap()]);
    assert!(again.status.success(), "{}", stderr(&again));
    let resummarized: serde_json::Value = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(resummarized["problems"], summary["problems"]);
    assert_eq!(resummarized["best"], summary["best"]);

    let rerun = dir.path().join("res2");
    let o = rmfs(&["plan", "--config", &cfg, "--out", rerun.to_str().unwrap(), "--parallelism", "1"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(out.join("results.csv")).unwrap(), std::fs::read(rerun.join("results.csv")).unwrap());
}

#[test]
fn failed_runs_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("pods = 109", "pods = 200"));
    let out = dir.path().join("res");
    let o = rmfs(&["plan", "--config", &cfg, "--out", out.to_str().unwrap(), "--repetitions", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().filter(|l| l.starts_with("failed:")).count(), 12);
    assert_eq!(std::fs::read_to_string(out.join("results.csv")).unwrap().lines().count(), 13);
}
