use std::process::{Command, Output};

use serde_json::Value;

fn mequi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mequi")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = mequi(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn data<'a>(v: &'a Value, operation: &str) -> &'a Value {
    &v["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["operation"] == operation)
        .unwrap_or_else(|| panic!("no {operation} in {v}"))["data"]
}

#[test]
fn gen_prints_seventeen_thue_morse_symbols() {
    let v = report(&["gen", "--system", "thue-morse", "--window", "-8..8"]);
    let symbols = data(&v, "point")["symbols"].as_str().unwrap();
    assert_eq!(symbols.len(), 17);
    assert_eq!(&symbols[8..], "011010011");
    for key in ["version", "config", "results", "checks"] {
        assert!(v.get(key).is_some());
    }
    assert_eq!(v["config"]["seed"], "0");
}

#[test]
fn defaults_round_trip_through_a_config_file() {
    let out = mequi(&["defaults"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("seed = 0")));
    let path = std::env::temp_dir().join(format!("mequi-defaults-{}.conf", std::process::id()));
    std::fs::write(&path, text + "system = sturmian\n").unwrap();
    let v = report(&["gen", "--config", path.to_str().unwrap(), "--window", "0..3"]);
    assert_eq!(v["config"]["system"], "sturmian");
    std::fs::remove_file(path).unwrap();
}

#[test]
fn flags_override_config_file() {
    let path = std::env::temp_dir().join(format!("mequi-override-{}.conf", std::process::id()));
    std::fs::write(&path, "seed = 5\nwindow = 0..1\n").unwrap();
    let v = report(&["gen", "--config", path.to_str().unwrap(), "--window", "0..4"]);
    assert_eq!(v["config"]["seed"], "5");
    assert_eq!(data(&v, "point")["symbols"].as_str().unwrap().len(), 5);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn sturmian_hamming_estimate_is_twice_the_phase_gap() {
    let v = report(&[
        "dfest", "--system", "sturmian", "--estimator", "weyl", "--integrand", "hamming", "--theta1", "0.1",
        "--theta2", "0.11", "--shift2", "0",
    ]);
    let d = data(&v, "pseudometric/weyl")["value"].as_f64().unwrap();
    assert!((d - 0.02).abs() < 5e-3, "{d}");
}

#[test]
fn odometer_scan_stays_below_delta() {
    let v = report(&[
        "scan", "--system", "odometer", "--pairs", "5", "--delta-exponents", "3..9", "--levels", "11", "--tail-min",
        "8", "--tail-max", "10",
    ]);
    for row in data(&v, "modulus-table")["rows"].as_array().unwrap() {
        assert!(row["max_d"].as_f64().unwrap() <= row["delta"].as_f64().unwrap(), "{row}");
    }
}

#[test]
fn exit_codes_follow_error_classes() {
    assert_eq!(mequi(&["gen", "--system", "nope"]).status.code(), Some(2));
    assert_eq!(mequi(&["gen", "--seed", "-1"]).status.code(), Some(2));
    assert_eq!(mequi(&["gen", "--window", "4..1"]).status.code(), Some(2));
    assert_eq!(mequi(&["gen", "--config", "/nonexistent/mequi.conf"]).status.code(), Some(2));
    assert_eq!(mequi(&["bogus"]).status.code(), Some(2));
    let ambiguous = mequi(&["gen", "--system", "sturmian", "--alpha", "0.5", "--theta1", "0"]);
    assert_eq!(ambiguous.status.code(), Some(3));
    let exhausted = mequi(&[
        "scan", "--system", "thue-morse", "--segment", "64", "--delta-exponents", "40..40", "--pairs", "1",
    ]);
    assert_eq!(exhausted.status.code(), Some(4));
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let args = ["spectrum", "--system", "period-doubling", "--observable", "sign", "--resolution", "512", "--n", "16384"];
    let runs: Vec<Vec<u8>> = ["1", "2", "4"]
        .iter()
        .map(|t| {
            let mut a = vec!["--threads", t];
            a.extend_from_slice(&args);
            let out = mequi(&a);
            assert_eq!(out.status.code(), Some(0));
            out.stdout
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn csv_output_is_written() {
    let path = std::env::temp_dir().join(format!("mequi-scan-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let out = mequi(&["scan", "--system", "rotation", "--pairs", "3", "--delta-exponents", "2..4", "--csv", p, "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("delta,"));
    std::fs::remove_file(path).unwrap();
}

#[test]
fn fullgroup_reports_non_commuting_witness() {
    let v = report(&["fullgroup"]);
    let e = data(&v, "element");
    assert_eq!(e["commute"], false);
    assert_eq!(data(&v, "isometry")["isometric"], true);
}
