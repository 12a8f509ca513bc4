// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fs;
use std::process::{Command, Output};

use edtemu_core::parse_link_config;

fn edtemu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edtemu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn load_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.conf");
    fs::write(&path, "").unwrap();
    let out = edtemu(&["load", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("loaded 0 entries"));
}

#[test]
fn load_reports_entry_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.conf");
    let out = edtemu(&[
        "mesh",
        "--n",
        "20",
        "--delay",
        "3ms",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let pair = edtemu(&["load", path.to_str().unwrap(), "--key-mode", "pair"]);
    assert_eq!(pair.status.code(), Some(0));
    assert!(
        stdout(&pair).starts_with("loaded 380 entries in "),
        "{}",
        stdout(&pair)
    );
    assert!(stdout(&pair).trim_end().ends_with(" ms"));

    // destination keys collapse the mesh to one entry per node
    let dst = edtemu(&["load", path.to_str().unwrap()]);
    assert!(stdout(&dst).starts_with("loaded 20 entries in "));
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    let mut text = String::from("# header\n");
    for k in 2..=6 {
        text.push_str(&format!("10.0.0.1 10.0.1.{k} delay=1ms\n"));
    }
    text.push_str("10.0.0.1 10.0.2.7 delay=fast\n");
    text.push_str("10.0.0.1 10.0.2.8 delay=1ms\n");
    fs::write(&path, text).unwrap();
    let out = edtemu(&["load", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));
}

#[test]
fn capacity_overflow_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.conf");
    edtemu(&[
        "mesh",
        "--n",
        "5",
        "--rate",
        "1Mbit",
        "--out",
        path.to_str().unwrap(),
    ]);
    let out = edtemu(&[
        "load",
        path.to_str().unwrap(),
        "--key-mode",
        "pair",
        "--capacity",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let out = edtemu(&["load", "/nonexistent/links.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mesh_of_two() {
    let out = edtemu(&[
        "mesh",
        "--n",
        "2",
        "--subnet",
        "192.168.7.0/24",
        "--delay",
        "20ms",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "192.168.7.1 192.168.7.2 delay=20ms\n192.168.7.2 192.168.7.1 delay=20ms\n"
    );
}

#[test]
fn mesh_of_five_carries_the_rate_everywhere() {
    let out = edtemu(&["mesh", "--n", "5", "--rate", "100Mbit"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 20);
    assert!(lines.iter().all(|l| l.ends_with(" rate=100Mbit")));

    let specs = parse_link_config(&text).unwrap();
    let pairs: HashSet<_> = specs.iter().map(|s| (s.src(), s.dst())).collect();
    assert_eq!(pairs.len(), 20);
    assert!(specs.iter().all(|s| s.src() != s.dst()));
    assert!(specs
        .iter()
        .all(|s| s.params().rate().unwrap().get() == 12_500_000));
}

#[test]
fn mesh_errors() {
    assert_eq!(
        edtemu(&["mesh", "--n", "1", "--delay", "1ms"])
            .status
            .code(),
        Some(1)
    );
    let small = edtemu(&[
        "mesh",
        "--n",
        "3",
        "--subnet",
        "10.0.0.0/31",
        "--delay",
        "1ms",
    ]);
    assert_eq!(small.status.code(), Some(1));
    assert_eq!(edtemu(&["mesh", "--n", "3"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(edtemu(&[]).status.code(), Some(1));
    assert_eq!(edtemu(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        edtemu(&["bench", "latency", "--no-such-flag"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        edtemu(&["bench", "latency", "--rate", "0bit"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        edtemu(&["bench", "latency", "--datapath", "tc"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn invalid_experiment_combinations_exit_one() {
    let out = edtemu(&[
        "bench",
        "latency",
        "--counts",
        "100",
        "--match-index",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("out of range"));
    assert_eq!(edtemu(&["bench", "accuracy"]).status.code(), Some(1));
    let chain_entries = edtemu(&[
        "bench",
        "config",
        "--datapath",
        "filter-chain",
        "--entries",
        "9",
    ]);
    assert_eq!(chain_entries.status.code(), Some(1));
}

#[test]
fn every_help_exits_zero_and_lists_flags() {
    let cases: [(&[&str], &[&str]); 7] = [
        (&["--help"], &["load", "mesh", "bench"]),
        (&["load", "--help"], &["--key-mode", "--capacity"]),
        (
            &["mesh", "--help"],
            &["--n", "--subnet", "--rate", "--delay", "--out"],
        ),
        (
            &["bench", "--help"],
            &["config", "latency", "throughput", "accuracy"],
        ),
        (
            &["bench", "config", "--help"],
            &[
                "--datapath",
                "--n",
                "--entries",
                "--wall-clock",
                "--seed",
                "--out",
            ],
        ),
        (
            &["bench", "throughput", "--help"],
            &[
                "--datapath",
                "--counts",
                "--match-index",
                "--rate",
                "--delay",
                "--duration",
                "--packet-length",
                "--baseline-rtt",
                "--jitter",
                "--line-rate",
                "--queue-limit",
                "--mode",
                "--filter-check-ns",
                "--map-lookup-ns",
                "--seed",
                "--out",
            ],
        ),
        (
            &["bench", "accuracy", "--help"],
            &["--rate", "--delay", "--seed"],
        ),
    ];
    for (args, flags) in cases {
        let out = edtemu(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let help = stdout(&out);
        for flag in flags {
            assert!(help.contains(flag), "{args:?} help lacks {flag}");
        }
    }
}

#[test]
fn latency_csv_shows_linear_growth() {
    let out = edtemu(&[
        "bench",
        "latency",
        "--datapath",
        "filter-chain",
        "--counts",
        "1000,65000",
        "--duration",
        "5s",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# seed=42"));
    assert_eq!(
        lines.next(),
        Some("experiment,datapath,param_count,match_index,rep,metric,value,unit")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 8 && r[5] == "rtt_ns"));
    let mean = |count: &str| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == count)
            .map(|r| r[6].parse().unwrap())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (a, b) = (mean("1000") - 300_000.0, mean("65000") - 300_000.0);
    assert!((b / a - 65.0).abs() < 1e-9);
}

#[test]
fn seed_is_echoed_and_output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let args = [
        "bench",
        "accuracy",
        "--delay",
        "1ms",
        "--duration",
        "4s",
        "--seed",
        "1234",
    ];
    let direct = edtemu(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert_eq!(edtemu(&with_out).status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), direct.stdout);
    assert!(stdout(&direct).starts_with("# seed=1234\n"));
}
