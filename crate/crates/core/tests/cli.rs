use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mpsim::experiment::{parse_summary_csv, SUMMARY_HEADER};

fn mpsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpsim"))
        .args(args)
        .env_remove("MPSIM_THREADS")
        .output()
        .expect("spawn mpsim")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_summary_and_timeseries() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("run.csv");
    let series = dir.path().join("series.csv");
    let out = mpsim(&[
        "run", "--strategy", "min_rtt", "--agents", "10",
        "--output", path_str(&summary), "--timeseries", path_str(&series),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = parse_summary_csv(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].strategy.as_str(), rows[0].agents), ("min_rtt", 10));

    let text = fs::read_to_string(&series).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,path_id,load_mbps,overflow_mbps,inst_rtt_ms"));
    assert_eq!(lines.count(), 300 * 3);
}

#[test]
fn run_is_byte_deterministic() {
    let args = ["run", "--strategy", "epsilon_greedy", "--agents", "40", "--seed", "9", "--raw"];
    let a = mpsim(&args);
    let b = mpsim(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_changes_stochastic_runs() {
    let run = |seed: &str| {
        mpsim(&["run", "--strategy", "epsilon_greedy", "--agents", "40", "--seed", seed, "--raw"]).stdout
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn full_sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = mpsim(&["sweep", "--all-strategies", "--steps", "40", "-o", path_str(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with(SUMMARY_HEADER));
    assert_eq!(parse_summary_csv(&text).unwrap().len(), 49);

    let md = mpsim(&["report", "--in", path_str(&csv)]);
    assert!(md.status.success());
    let md = String::from_utf8(md.stdout).unwrap();
    assert_eq!(md.lines().filter(|l| l.starts_with("| ")).count(), 50);

    let again = mpsim(&["report", "--in", path_str(&csv), "--format", "csv"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn selected_strategies_and_counts() {
    let out = mpsim(&["sweep", "--strategies", "min_rtt", "--agents-list", "10"]);
    assert!(out.status.success());
    let rows = parse_summary_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].agents, 10);
}

#[test]
fn epsilon_grid_rows() {
    let out = mpsim(&["sweep", "--epsilon-grid", "0,0.1,0.2,0.3,0.4,0.5", "--agents", "50", "--steps", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,efficiency,loss"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["sweep", "--strategies", "epsilon_greedy,weighted_round_robin", "--steps", "60", "--raw"];
    let free = mpsim(&args);
    let single = Command::new(env!("CARGO_BIN_EXE_mpsim"))
        .args(args)
        .env("MPSIM_THREADS", "1")
        .output()
        .unwrap();
    assert!(single.status.success());
    assert_eq!(free.stdout, single.stdout);
}

#[test]
fn missing_report_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpsim(&["report", "--in", path_str(&dir.path().join("absent.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_topology_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("t.json");
    fs::write(&topo, r#"{"name":"x","paths":[{"id":1,"capacity_mbps":0,"base_rtt_ms":5}]}"#).unwrap();
    let out = mpsim(&["run", "--strategy", "min_rtt", "--topology", path_str(&topo)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn custom_topology_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("t.json");
    fs::write(
        &topo,
        r#"{"name":"pair","paths":[{"id":1,"capacity_mbps":10,"base_rtt_ms":5},{"id":2,"capacity_mbps":10,"base_rtt_ms":5}]}"#,
    )
    .unwrap();
    let series = dir.path().join("s.csv");
    let out = mpsim(&[
        "run", "--strategy", "round_robin", "--agents", "4", "--steps", "5",
        "--topology", path_str(&topo), "--timeseries", path_str(&series),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&series).unwrap().lines().count(), 1 + 5 * 2);
}

#[test]
fn unknown_strategy_exits_2() {
    let out = mpsim(&["run", "--strategy", "fastest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("weighted_round_robin"));
}
