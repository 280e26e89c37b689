use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coop-route"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_on_a_generated_network() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    let out = cli(&["gen", "--nodes", "6", "--seed", "3", "--out", s(&net)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = cli(&["solve", "--net", s(&net)]);
    assert_eq!(code(&out), 0);
    let sol: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let coop = sol["allocation"]["delay"].as_f64().unwrap();
    assert_eq!(sol["method"], "exhaustive");

    let out = cli(&["baseline", "--net", s(&net)]);
    assert_eq!(code(&out), 0);
    let sp: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(coop <= sp["total_delay"].as_f64().unwrap() * (1.0 + 1e-9));

    for method in ["greedy", "local-search", "exhaustive"] {
        let out = cli(&["solve", "--net", s(&net), "--method", method, "--semantics", "broadcast-all"]);
        assert_eq!(code(&out), 0, "{method}");
    }

    let trace = dir.path().join("trace.csv");
    let out = cli(&["distributed", "--net", s(&net), "--policy", "round-robin", "--trace", s(&trace)]);
    assert_eq!(code(&out), 0);
    let brief: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(brief["policy"], "round_robin");
    assert!(brief["delay"].as_f64().unwrap() >= coop * (1.0 - 1e-9));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("time_s,node_id,event\n"));
}

#[test]
fn experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"trials": 4, "n_nodes": 6, "seed": 9}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&["experiment", "--config", s(&cfg), "--out", s(&out_dir), "--parallelism", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["trials"], 4);
    for f in ["results.csv", "summary.json", "rows.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["solve", "--bogus"])), 1);
    assert_eq!(code(&cli(&["solve", "--net", "x.json", "--semantics", "psychic"])), 1);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&cli(&["solve", "--net", s(&missing)])), 2);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let out = cli(&["baseline", "--net", s(&garbage)]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"trials": 0}"#).unwrap();
    let out_dir = dir.path().join("out");
    assert_eq!(code(&cli(&["experiment", "--config", s(&cfg), "--out", s(&out_dir)])), 1);

    std::fs::write(&cfg, r#"{"trials": 3, "n_nodes": 3, "alpha": 100, "side": 1e6}"#).unwrap();
    let out = cli(&["experiment", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("flagged"));
}
