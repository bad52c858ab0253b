use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const SCENARIO: &str = r#"seed = 11
tick_rate = 0.0

[models.default]
behavior = "red-green-v4"

[[nodes]]
x = 40
y = 40
[[nodes]]
x = 90
y = 60
[[nodes]]
x = 200
y = 150
"#;

const COMMANDS: &str = r#"{"tick":3,"cmd":"addNode","x":100,"y":100}
{"tick":20,"cmd":"moveNode","id":0,"x":300,"y":200}
{"tick":35,"cmd":"removeNode","id":2}
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dynakernel"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn headless_trace(
    dir: &Path,
    scenario: &Path,
    commands: &Path,
    name: &str,
    extra: &[&str],
) -> Vec<u8> {
    let trace = dir.join(name);
    let mut args = vec![
        "run",
        scenario.to_str().unwrap(),
        "--headless",
        "--ticks",
        "60",
        "--commands",
        commands.to_str().unwrap(),
        "--trace-out",
        trace.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(&run(&args));
    fs::read(trace).unwrap()
}

#[test]
fn headless_traces_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let commands = write(dir.path(), "c.ndjson", COMMANDS);
    let a = headless_trace(dir.path(), &scenario, &commands, "a.ndjson", &[]);
    let b = headless_trace(dir.path(), &scenario, &commands, "b.ndjson", &[]);
    assert!(!a.is_empty());
    assert_eq!(Sha256::digest(&a), Sha256::digest(&b));

    let text = String::from_utf8(a.clone()).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["ev"].is_string() && v["time"].is_u64(), "{line}");
    }
    assert!(text.lines().any(|l| l.contains(r#""ev":"nodeRemoved""#)));

    let reseeded = headless_trace(
        dir.path(),
        &scenario,
        &commands,
        "c.ndjson",
        &["--seed", "12"],
    );
    assert_ne!(Sha256::digest(&a), Sha256::digest(&reseeded));
}

#[test]
fn recorded_commands_replay_to_the_same_trace() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let commands = write(dir.path(), "c.ndjson", COMMANDS);
    let record = dir.path().join("rec.ndjson");
    let first = headless_trace(
        dir.path(),
        &scenario,
        &commands,
        "a.ndjson",
        &["--record-commands", record.to_str().unwrap()],
    );
    let second = headless_trace(dir.path(), &scenario, &record, "b.ndjson", &[]);
    assert_eq!(first, second);
}

#[test]
fn export_writes_tikz() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let out = dir.path().join("fig.tex");
    let args = [
        "export",
        scenario.to_str().unwrap(),
        "--at-tick",
        "0",
        "--format",
        "tikz",
        "--out",
        out.to_str().unwrap(),
    ];
    ok(&run(&args));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("\\begin{tikzpicture}\n"));
    assert!(text.contains("  \\path (0.80,0.80) node (v0) {};"));
    assert_eq!(
        text.lines().filter(|l| l.starts_with("  \\path")).count(),
        3
    );
    assert_eq!(
        text.lines().filter(|l| l.starts_with("  \\draw")).count(),
        1
    );

    let stdout = run(&[
        "export",
        scenario.to_str().unwrap(),
        "--at-tick",
        "0",
        "--format",
        "tikz",
    ]);
    ok(&stdout);
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), text);

    let scaled = run(&[
        "export",
        scenario.to_str().unwrap(),
        "--format",
        "tikz",
        "--scale",
        "10",
    ]);
    ok(&scaled);
    assert!(String::from_utf8(scaled.stdout)
        .unwrap()
        .contains("(4.00,4.00)"));

    let later = run(&[
        "export",
        scenario.to_str().unwrap(),
        "--at-tick",
        "50",
        "--format",
        "tikz",
    ]);
    ok(&later);
    assert_ne!(String::from_utf8(later.stdout).unwrap(), text);
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "[models.default]\nbehavior = \"red-green-v9\"\n",
    );
    let out = run(&["run", bad.to_str().unwrap(), "--headless", "--ticks", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("models.default.behavior"), "{err}");

    let syntax = write(dir.path(), "syntax.toml", "seed = \n");
    assert_eq!(
        run(&["export", syntax.to_str().unwrap(), "--format", "tikz"])
            .status
            .code(),
        Some(2)
    );

    let missing = run(&[
        "run",
        "/nonexistent/scenario.toml",
        "--headless",
        "--ticks",
        "1",
    ]);
    assert!(!missing.status.success());
}

#[test]
fn headless_needs_a_bound() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let out = run(&["run", scenario.to_str().unwrap(), "--headless"]);
    assert!(!out.status.success());
    let bounded = write(dir.path(), "b.toml", &format!("run_limit = 15\n{SCENARIO}"));
    ok(&run(&["run", bounded.to_str().unwrap(), "--headless"]));
}

#[test]
fn live_run_stops_at_tick_limit() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let trace = dir.path().join("live.ndjson");
    let out = run(&[
        "run",
        scenario.to_str().unwrap(),
        "--listen",
        "127.0.0.1:0",
        "--ticks",
        "40",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("serving on 127.0.0.1:"));
    let text = fs::read_to_string(trace).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert!(last["time"].as_u64().unwrap() < 40);

    let headless = dir.path().join("headless.ndjson");
    ok(&run(&[
        "run",
        scenario.to_str().unwrap(),
        "--headless",
        "--ticks",
        "40",
        "--trace-out",
        headless.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(headless).unwrap(), text);
}
