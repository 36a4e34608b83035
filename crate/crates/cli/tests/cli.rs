use std::process::Command;

use mtoi_cli::{run, Outcome, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

const WORKED: &str = r#"{"K":3,"gains":[4,9],"powers":[4,2,20]}"#;

fn mtoi(args: &[&str]) -> Outcome {
    run(std::iter::once("mtoi").chain(args.iter().copied()))
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", o.stdout))
}

#[test]
fn bounds_on_worked_config() {
    let o = mtoi(&["bounds", "-c", WORKED]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = json(&o);
    assert!((v["lower_raw"].as_f64().unwrap() + 19.066).abs() < 1e-3);
    assert!((v["upper"].as_f64().unwrap() - 3.384347).abs() < 1e-6);
    assert!((v["fK"].as_f64().unwrap() - 21.6421).abs() < 1e-4);
    assert_eq!(v["lower"].as_f64(), Some(0.0));
    assert_eq!(v["gap_budget"], Value::Null);
    assert_eq!(v["manifest"]["command"], "bounds");
    for key in [
        "lower_raw",
        "lower",
        "upper",
        "fK",
        "gap",
        "case1",
        "case2",
        "gap_budget",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn bounds_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("worked.json");
    std::fs::write(&path, WORKED).unwrap();
    let o = mtoi(&["bounds", "-c", path.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(
        json(&o)["manifest"],
        json(&mtoi(&["bounds", "-c", WORKED]))["manifest"]
    );
}

#[test]
fn config_errors_exit_2() {
    let o = mtoi(&["bounds", "-c", r#"{"K":3,"gains":[4,9],"powers":[4,2]}"#]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("/powers"), "{}", o.stderr);
    let o = mtoi(&["bounds", "-c", "{\"K\":3,"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("byte"), "{}", o.stderr);
    assert_eq!(
        mtoi(&["bounds", "-c", "/no/such/file.json"]).code,
        EXIT_USAGE
    );
}

#[test]
fn unknown_command_exits_2_with_usage() {
    let o = mtoi(&["frobnicate"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("Usage"));
    assert_eq!(mtoi(&[]).code, EXIT_USAGE);
    assert_eq!(mtoi(&["gap-scan", "--case", "3"]).code, EXIT_USAGE);
}

#[test]
fn help_exits_0() {
    let o = mtoi(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("simulate"));
}

#[test]
fn gap_scan_case_2() {
    let o = mtoi(&["gap-scan", "--case", "2", "--trials", "1000", "--seed", "7"]);
    assert_eq!(o.code, EXIT_OK);
    let v = json(&o);
    assert!(v["worst_gap"].as_f64().unwrap() <= 23.142);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["manifest"]["seed"], 7);
}

#[test]
fn layers_json_and_table() {
    let o = mtoi(&["layers", "-c", WORKED]);
    assert_eq!(o.code, EXIT_OK);
    let v = json(&o);
    let q: Vec<f64> = serde_json::from_value(v["plan"]["q"].clone()).unwrap();
    assert_eq!(q, vec![1.0, 4.0, 9.0, 16.0, 18.0, 20.0]);
    assert_eq!(v["alignment"]["aligned"], true);
    let t = mtoi(&["layers", "-c", WORKED, "--format", "table"]);
    assert_eq!(t.code, EXIT_OK);
    assert!(t.stdout.contains("delimiters"));
}

#[test]
fn sweep_csv_schema() {
    let o = mtoi(&["sweep", "-c", WORKED, "--exp-min", "10", "--exp-max", "20"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let mut lines = o.stdout.lines();
    assert_eq!(lines.next(), Some("P,half_log2P,lower,upper,gap"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[0].starts_with("1024,5,"));
    assert!(rows.iter().all(|r| r.split(',').count() == 5));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = mtoi(&["sweep", "-c", WORKED, "--out", out.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK);
    let v = json(&o);
    assert!((v["upper_slope"].as_f64().unwrap() - 2.0).abs() < 0.05);
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .starts_with("P,half_log2P"));
}

#[test]
fn leakage_report() {
    let o = mtoi(&["leakage", "--q", "2", "--N", "1", "--K", "2"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = json(&o);
    assert!((v["leakage_bits"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["bound_bits"].as_f64(), Some(1.0));
    assert_eq!(v["T_max"], 2);
    assert_eq!(v["mod_sum_leakage_bits"].as_f64(), Some(0.0));

    let o = mtoi(&["leakage", "--q", "10", "--N", "4", "--K", "3"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("enumeration limit"));
}

#[test]
fn simulate_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("layers.csv");
    let cfg = r#"{"K":3,"gains":[1,1],"powers":[1e4,1e4,1e4]}"#;
    let o = mtoi(&[
        "simulate",
        "-c",
        cfg,
        "--trials",
        "2000",
        "--seed",
        "5",
        "--shards",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = json(&o);
    assert_eq!(v["trials"], 2000);
    assert_eq!(v["receivers"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("layer,receiver,errors,trials"));
    assert_eq!(lines.count(), 3);
    assert_eq!(
        mtoi(&["simulate", "-c", cfg, "--margin", "-1"]).code,
        EXIT_USAGE
    );
}

#[test]
fn randomized_commands_are_byte_identical() {
    let cfg = r#"{"K":3,"gains":[40,1],"powers":[1000,1e5,1e6]}"#;
    let cases: [&[&str]; 3] = [
        &["gap-scan", "--case", "1", "--trials", "500", "--seed", "9"],
        &[
            "leakage",
            "--q",
            "3",
            "--N",
            "2",
            "--K",
            "3",
            "--dither-grid",
            "4",
            "--seed",
            "9",
        ],
        &[
            "simulate", "-c", cfg, "--trials", "3000", "--seed", "9", "--shards", "4",
        ],
    ];
    for args in cases {
        let a = mtoi(args);
        let b = mtoi(args);
        assert_eq!(a.code, EXIT_OK);
        assert_eq!(a.stdout, b.stdout);
        let mut seq = vec!["--sequential"];
        seq.extend_from_slice(args);
        assert_eq!(mtoi(&seq).stdout, a.stdout);
    }
}

#[test]
fn timestamp_is_opt_in() {
    let plain = json(&mtoi(&["bounds", "-c", WORKED]));
    assert!(plain["manifest"].get("timestamp").is_none());
    let stamped = json(&mtoi(&["bounds", "-c", WORKED, "--timestamp"]));
    assert!(stamped["manifest"]["timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mtoi");
    let ok = Command::new(bin)
        .args(["bounds", "-c", WORKED])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let bad = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    assert!(!bad.stderr.is_empty());
}
