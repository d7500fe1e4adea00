//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::Command;

fn tool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_extremal-arrays"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn convergence_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "max-gumbel-convergence", "array": {"gamma": [[0, 1], [1, 0]], "gumbel_scaling": "hazard"},
            "n_schedule": [50, 500], "reps": 4000}"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out{threads}"));
        let status = tool()
            .args(["convergence", "--config", &cfg, "--seed", "11", "--threads", threads, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push((fs::read(out.join("convergence.csv")).unwrap(), fs::read(out.join("convergence.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("n,reps,sup_distance,dkw_radius,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn failing_verdict_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // no finite-n allowance: tiny blocks are far from the limit
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "max-gumbel-convergence", "array": {"gamma": [[0, 1], [1, 0]], "gumbel_scaling": "hazard"},
            "n_schedule": [5], "reps": 20000, "finite_n_allowance": 0}"#,
    );
    let status = tool()
        .args(["convergence", "--config", &cfg, "--seed", "1", "--out"])
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "min-convergence", "array": {"gamma": [[0, 1], [1, 0]]}, "n_schedule": [1000, 100], "reps": 5000}"#,
    );
    let out = tool()
        .args(["convergence", "--config", &cfg, "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("E_INVARIANT") && err.contains("n_schedule"), "{err}");
}

#[test]
fn every_subcommand_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("norming", r#"{"law": {"family": "normal"}, "rule": "minima", "n": [100, 1000]}"#, "norming"),
        (
            "simulate-array",
            r#"{"array": {"gamma": [[0, 1], [1, 0]], "mode": "max"}, "n": 100, "reps": 50}"#,
            "extremes",
        ),
        (
            "eval-limit",
            r#"{"law": "min", "params": {"gamma": [[0, 1], [1, 0]]}, "points": [[0.2, 0.3]], "budget": {"paths": 5000}}"#,
            "limit",
        ),
        ("simulate-br", r#"{"kernel": {"variogram": {"kind": "brownian"}}, "grid": [0, 1], "reps": 20}"#, "br_paths"),
        (
            "simulate-pk",
            r#"{"kernel": {"variogram": {"kind": "brownian"}, "variance": {"kind": "constant", "value": 1}}, "grid": [0, 1], "reps": 20}"#,
            "pk_paths",
        ),
    ];
    for (cmd, text, stem) in cases {
        let cfg = write(dir.path(), &format!("{stem}.cfg.json"), text);
        let out = dir.path().join(cmd);
        let status = tool().args([cmd, "--config", &cfg, "--seed", "3", "--out"]).arg(&out).status().unwrap();
        assert_eq!(status.code(), Some(0), "{cmd}");
        let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join(format!("{stem}.json"))).unwrap()).unwrap();
        assert_eq!(meta["subcommand"], cmd);
        assert_eq!(meta["csv_version"], 1);
        assert!(fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap().lines().count() >= 2);
    }
}
