use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn polythread(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polythread"))
        .args(args)
        .env_remove("POLYTHREAD_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn extract_discards_what_follows_a_switch_over() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.is", "swo 3\na f.m\n");
    let o = polythread(&["extract", "--program", &p]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "(switch 3)");
}

#[test]
fn check_axioms_reports_every_axiom() {
    let o = polythread(&[
        "check-axioms",
        "--suite",
        "spt",
        "--cases",
        "100",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for i in 1..=7 {
        assert!(out.contains(&format!("SPT{i}")), "{out}");
    }
    assert_eq!(out.matches("pass 100/100").count(), 7);

    let o = Command::new(env!("CARGO_BIN_EXE_polythread"))
        .args(["check-axioms", "--suite", "pcdifs", "--cases", "5"])
        .env("POLYTHREAD_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("pass 5/5").count(), 12);

    assert_eq!(
        polythread(&["check-axioms", "--suite", "bogus"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_prints_a_json_trace() {
    let dir = TempDir::new().unwrap();
    let program = write(dir.path(), "main.is", "swo 1\n");
    let frags = dir.path().join("frags");
    fs::create_dir(&frags).unwrap();
    write(&frags, "1.is", "a f.m\nswo 2\n");
    write(&frags, "2.is", "+ c.iszero\n!\n!\n");
    let services = write(
        dir.path(),
        "svc.json",
        r#"[{"focus": "c", "kind": "nat_counter", "params": {"init": 0}}]"#,
    );
    let args = [
        "run",
        "--program",
        &program,
        "--fragments",
        frags.to_str().unwrap(),
        "--services",
        &services,
        "--replies",
        "seed:42",
        "--resolver",
        "seed:42",
        "--max-steps",
        "1000",
        "--format",
        "json",
    ];
    let o = polythread(&args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "terminated");
    let actions: Vec<&str> = v["steps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["action"].as_str().unwrap())
        .collect();
    assert_eq!(actions, ["tau", "f.m", "tau", "tau"]);
    assert_eq!(v["steps"][0]["request"], "tls.init");
    assert_eq!(stdout(&polythread(&args)), stdout(&o));
}

#[test]
fn exit_statuses() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.is", "a f.m\n!\n");
    assert_eq!(polythread(&["run", "--program", &p]).status.code(), Some(3));
    assert_eq!(
        polythread(&["run", "--program", &p, "--replies", "script:T"])
            .status
            .code(),
        Some(0)
    );

    let bad = write(dir.path(), "bad.is", "a f.m\njump 3\n");
    let o = polythread(&["extract", "--program", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(polythread(&["run"]).status.code(), Some(2));
    assert_eq!(polythread(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        polythread(&["translate", "--thread", "(pcc f.a S"])
            .status
            .code(),
        Some(2)
    );

    let v = write(
        dir.path(),
        "v.json",
        r#"{"threads": ["extern"], "fragments": ["S"]}"#,
    );
    assert_eq!(
        polythread(&["interleave", "--vector", &v]).status.code(),
        Some(3)
    );
    let o = polythread(&["interleave", "--vector", &v, "--resolver", "script:1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("tls.init"));
}

#[test]
fn distributed_runs() {
    let dir = TempDir::new().unwrap();
    let config = write(
        dir.path(),
        "d.json",
        r#"{"vector": [{"location": 1, "threads": ["(mig 2 (pcc f.a S S) S)"], "fragments": [1]},
                       {"location": 2, "threads": [], "fragments": []}],
            "fragment_vector": ["S"]}"#,
    );
    for command in ["distribute", "fragsearch"] {
        let o = polythread(&[
            command,
            "--config",
            &config,
            "--format",
            "json",
            "--replies",
            "script:T",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let steps: Vec<(u64, &str)> = v["steps"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| {
                (
                    s["location"].as_u64().unwrap(),
                    s["action"].as_str().unwrap(),
                )
            })
            .collect();
        assert_eq!(steps, [(1, "tau"), (2, "f.a")]);
    }
}

#[test]
fn internalize_and_translate() {
    let dir = TempDir::new().unwrap();
    let v = write(
        dir.path(),
        "v.json",
        r#"{"threads": ["extern"], "fragments": ["S", "(switch 3)"]}"#,
    );
    let o = polythread(&["internalize", "--vector", &v]);
    assert_eq!(o.status.code(), Some(0));
    let out: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out["threads"][0], "(switch 3)");
    assert_eq!(out["fragments"][1], "D");
    assert_eq!(out["fragments"][2], "(pcs ext.sel (switch 1) (switch 2))");

    let o = polythread(&["translate", "--thread", "(pcc f.a S D)"]);
    assert_eq!(
        stdout(&o).trim(),
        "snd_f(a) . (rcv_f(T) . stp + rcv_f(F) . i . delta)"
    );

    let svc = write(
        dir.path(),
        "svc.json",
        r#"[{"focus": "f", "kind": "constant", "params": {"reply": "T"}}]"#,
    );
    let o = polythread(&[
        "translate",
        "--thread",
        "(pcc f.a S D)",
        "--focus",
        "f",
        "--services",
        &svc,
        "--dump",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let dump: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let labels: Vec<&str> = dump["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["action"].as_str().unwrap())
        .collect();
    assert!(
        labels
            .iter()
            .all(|a| !a.starts_with("snd_f") && !a.starts_with("rcv_f")),
        "{labels:?}"
    );
    assert!(labels.contains(&"stp"));
}
