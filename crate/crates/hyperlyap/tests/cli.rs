//! End-to-end tests of the compiled binary: exit codes, run-record schema,
//! determinism across repeated runs and thread counts, CSV headers, config
//! precedence, and the checkpoint/resume round trip.

use serde_json::Value;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const TABLE_HEADER: &str =
    "id,model,C,d,mu1,mu2,lambda1,lambda1_plus_lambda2,bound,slack,chi_abs,thin_expected";

/// Short but nontrivial simulation; keeps each binary invocation fast.
const SHORT: &[&str] = &[
    "--steps",
    "4000",
    "--burn-in",
    "200",
    "--trajectories",
    "2",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperlyap"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn record_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}; stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&stdout_of(out)).expect("stdout parses as a JSON record")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperlyap-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

fn masked(mut rec: Value) -> Value {
    rec["timestamp"] = Value::Null;
    rec["duration_seconds"] = Value::Null;
    rec
}

#[test]
fn simulate_records_are_deterministic_modulo_time() {
    let mut args = vec!["simulate", "--case", "4", "--seed", "7"];
    args.extend_from_slice(SHORT);
    let first = record_of(&run(&args));
    let second = record_of(&run(&args));

    assert_eq!(first["schema_version"], 1);
    assert_eq!(first["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(first["command"], args.join(" "));
    let ts = first["timestamp"].as_str().expect("timestamp string");
    assert!(ts.contains('T') && ts.contains("+00:00"), "not RFC3339: {ts}");
    assert!(first["duration_seconds"].as_f64().expect("duration") >= 0.0);

    // Same seed and config: everything but wall-clock fields agrees, and
    // the results payload is byte-identical.
    assert_eq!(masked(first.clone()), masked(second.clone()));
    assert_eq!(first["results"].to_string(), second["results"].to_string());

    let est = &first["results"]["estimate"];
    assert_eq!(est["lambda"].as_array().expect("lambda array").len(), 4);
    assert_eq!(first["results"]["case"], 4);
}

#[test]
fn table_csv_is_thread_count_independent_with_exact_header() {
    let base = [
        "table",
        "--output",
        "csv",
        "--seed",
        "3",
        "--steps",
        "1500",
        "--burn-in",
        "100",
        "--trajectories",
        "2",
    ];
    let mut one = base.to_vec();
    one.extend_from_slice(&["--threads", "1"]);
    let mut two = base.to_vec();
    two.extend_from_slice(&["--threads", "2"]);

    let out_one = run(&one);
    let out_two = run(&two);
    let via_env = Command::new(env!("CARGO_BIN_EXE_hyperlyap"))
        .args(base)
        .env("HYPERLYAP_THREADS", "2")
        .output()
        .expect("binary spawns");

    assert!(out_one.status.success());
    assert!(out_two.status.success());
    assert!(via_env.status.success());
    let text = stdout_of(&out_one);
    assert_eq!(text, stdout_of(&out_two), "worker count changed the table");
    assert_eq!(text, stdout_of(&via_env), "env-provided thread count changed the table");

    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], TABLE_HEADER);
    assert_eq!(lines.len(), 15, "header plus one row per catalog case");
    for (i, row) in lines[1..].iter().enumerate() {
        assert!(row.starts_with(&format!("{},", i + 1)), "row {i}: {row}");
    }
}

#[test]
fn usage_errors_exit_two() {
    // No target given.
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    // Unknown catalog row.
    let mut bad_case = vec!["simulate", "--case", "99"];
    bad_case.extend_from_slice(SHORT);
    assert_eq!(run(&bad_case).status.code(), Some(2));
    // --mu1 without --mu2 violates the pairing contract.
    assert_eq!(run(&["degrees", "--mu1", "1/5"]).status.code(), Some(2));
    // Growth fits need at least a quadratic's worth of coefficients.
    assert_eq!(run(&["wronskian", "--order", "1"]).status.code(), Some(2));
    // Unknown subcommand and unknown flag are parser errors.
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["table", "--no-such-flag"]).status.code(), Some(2));
    // Resuming from a path that does not exist.
    let mut gone = vec!["simulate", "--case", "1", "--resume", "/nonexistent/snap.json"];
    gone.extend_from_slice(SHORT);
    assert_eq!(run(&gone).status.code(), Some(2));
}

#[test]
fn expanding_variant_exits_three() {
    let mut args = vec!["simulate", "--case", "1", "--expanding-variant"];
    args.extend_from_slice(SHORT);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("not integrable"), "stderr: {err}");
}

#[test]
fn corrupt_snapshot_exits_five() {
    let snap = scratch("corrupt.snapshot.json");
    fs::write(&snap, "{ definitely not a snapshot").expect("write scratch file");
    let snap_str = snap.to_str().expect("utf-8 path");
    let mut args = vec!["simulate", "--case", "1", "--resume", snap_str];
    args.extend_from_slice(SHORT);
    assert_eq!(run(&args).status.code(), Some(5));
    let _ = fs::remove_file(&snap);
}

#[test]
fn checkpoint_then_resume_reproduces_results() {
    let snap = scratch("roundtrip.snapshot.json");
    let _ = fs::remove_file(&snap);
    let snap_str = snap.to_str().expect("utf-8 path");
    let base = [
        "simulate", "--case", "1", "--seed", "11", "--steps", "3000", "--burn-in", "150",
        "--trajectories", "2",
    ];

    let mut write_args = base.to_vec();
    write_args.extend_from_slice(&["--checkpoint", snap_str]);
    let written = record_of(&run(&write_args));
    assert!(snap.exists(), "checkpoint file was not produced");

    let mut resume_args = base.to_vec();
    resume_args.extend_from_slice(&["--resume", snap_str]);
    let resumed = record_of(&run(&resume_args));

    assert_eq!(
        written["results"].to_string(),
        resumed["results"].to_string(),
        "resumed run diverged from the checkpointed run"
    );
    let _ = fs::remove_file(&snap);
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let cfg = scratch("config.json");
    fs::write(&cfg, r#"{ "steps": 1500, "seed": 9 }"#).expect("write config");
    let cfg_str = cfg.to_str().expect("utf-8 path");

    // Flag beats file.
    let rec = record_of(&run(&[
        "simulate", "--case", "4", "--config", cfg_str, "--steps", "2500", "--burn-in", "100",
        "--trajectories", "2",
    ]));
    let sim = &rec["config"]["simulation"];
    assert_eq!(sim["steps"], 2500);
    assert_eq!(sim["seed"], 9);

    // File beats defaults.
    let rec = record_of(&run(&[
        "simulate", "--case", "4", "--config", cfg_str, "--burn-in", "100", "--trajectories",
        "2",
    ]));
    assert_eq!(rec["config"]["simulation"]["steps"], 1500);

    // Unknown keys are rejected, not silently dropped.
    let bad = scratch("bad-config.json");
    fs::write(&bad, r#"{ "stepz": 5 }"#).expect("write config");
    let bad_str = bad.to_str().expect("utf-8 path");
    let mut args = vec!["simulate", "--case", "4", "--config", bad_str];
    args.extend_from_slice(SHORT);
    assert_eq!(run(&args).status.code(), Some(2));

    let _ = fs::remove_file(&cfg);
    let _ = fs::remove_file(&bad);
}

#[test]
fn degree_records_expose_exact_values() {
    let rec = record_of(&run(&["degrees", "--case", "4"]));
    let results = &rec["results"];
    assert_eq!(results["degrees"]["e30"], "1/5");
    assert_eq!(results["degrees"]["e21"], "2/5");
    assert_eq!(results["degrees"]["e12"], "-2/5");
    assert_eq!(results["degrees"]["e03"], "-1/5");
    assert_eq!(results["bounds"]["k1"], "2/5");
    assert_eq!(results["bounds"]["k2"], "6/5");
    assert_eq!(results["degrees_from_cokernels_agree"], true);
    assert_eq!(results["cokernels"].as_array().expect("three points").len(), 3);

    // Same computation addressed by raw weights instead of a catalog row.
    let by_mu = record_of(&run(&["degrees", "--mu1", "1/5", "--mu2", "2/5"]));
    assert_eq!(by_mu["results"]["degrees"], results["degrees"]);
}

#[test]
fn strata_polygon_and_wronskian_records_parse() {
    let rec = record_of(&run(&["strata", "--genus", "2"]));
    let bounds = rec["results"]["bounds"].as_array().expect("bounds rows");
    assert_eq!(bounds.len(), 2);
    assert_eq!(bounds[0]["sum_bound"], "1");
    assert_eq!(bounds[1]["sum_bound"], "4/3");

    let rec = record_of(&run(&["polygon", "--case", "4"]));
    assert!(rec["results"]["hn_polygon"].is_object() || rec["results"]["hn_polygon"].is_array());

    let rec = record_of(&run(&["polygon", "--case", "4", "--lambda", "1.2,0.5,-0.5,-1.2"]));
    assert_eq!(rec["results"]["lyapunov_dominates_hn"], true);

    let rec = record_of(&run(&["wronskian", "--order", "30", "--window-start", "10"]));
    assert_eq!(rec["results"]["wronskian_constant_term"], "1");
    assert_eq!(rec["results"]["constant_term"], "16/3125");
    assert!(rec["results"]["verdict"].as_str().expect("verdict").starts_with("sqrt-growth"));
}

#[test]
fn csv_modes_use_documented_headers() {
    let cases: &[(&[&str], &str)] = &[
        (&["degrees", "--case", "4", "--output", "csv"], "quantity,value"),
        (&["strata", "--genus", "2", "--output", "csv"], "rank,height"),
        (&["polygon", "--case", "4", "--output", "csv"], "rank,height"),
        (
            &["wronskian", "--order", "10", "--window-start", "3", "--output", "csv"],
            "n,numerator,denominator,log_abs",
        ),
    ];
    for (args, header) in cases {
        let out = run(args);
        assert!(out.status.success(), "{args:?} failed");
        let text = stdout_of(&out);
        assert_eq!(
            text.lines().next().expect("nonempty output"),
            *header,
            "wrong header for {args:?}"
        );
    }

    let mut sim = vec!["simulate", "--case", "1", "--output", "csv"];
    sim.extend_from_slice(SHORT);
    let out = run(&sim);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert_eq!(text.lines().next().expect("nonempty output"), "k,lambda,stderr");
    assert_eq!(text.trim_end().lines().count(), 5, "header plus one row per exponent");
}
