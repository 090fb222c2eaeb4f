use std::process::{Command, Output};

use muckenhoupt::parse_weight;
use serde_json::Value;

fn aprh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aprh")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = aprh(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn constant_a1_of_inverse_square_root() {
    let v = json(&["constant", "--weight", "pow:-0.5", "--class", "a1", "--no-timestamp"]);
    assert_eq!(v["result"]["status"], "converged");
    assert!((v["result"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(v.get("timestamp").is_none());
}

#[test]
fn range_from_a1() {
    let v = json(&["range", "--weight", "pow:-0.5", "--from", "a1", "--no-timestamp"]);
    let r = &v["result"]["ranges"][0]["range"];
    assert_eq!(v["result"]["ranges"][0]["class"], "rh");
    assert_eq!(r["lo"], 1.0);
    assert!((r["hi"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(r["lo_open"], true);
    assert_eq!(r["hi_open"], true);

    let v = json(&["range", "--constant", "1", "--from", "a1", "--no-timestamp"]);
    assert_eq!(v["result"]["ranges"][0]["range"]["hi"], "inf");
}

#[test]
fn scan_table_brackets_two() {
    let out = aprh(&["scan", "--weight", "pow:-0.5", "--class", "rh", "--grid", "1.5:2.5:11", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,value,status,predicted"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let index: f64 = cols[0].parse().unwrap();
        assert_ne!(index, 2.0, "endpoint must not be evaluated");
        let want = if index < 2.0 { "converged" } else { "diverged" };
        assert_eq!(cols[2], want, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 12);
}

#[test]
fn identical_runs_give_identical_bytes() {
    for args in [
        &["constant", "--weight", "abspow:-0.5", "--class", "a1", "--no-timestamp"][..],
        &["scan", "--weight", "pow:1", "--class", "ap", "--grid", "1.5:2.5:5", "--no-timestamp"][..],
        &["cover", "--random", "11", "--dim", "2", "--depth", "6", "--entries", "--no-timestamp"][..],
        &["verify-ineq", "--weight", "pow:-0.5", "--interval", "0:1", "--lambdas", "16", "--no-timestamp"][..],
    ] {
        let a = aprh(args);
        let b = aprh(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn timestamp_present_by_default() {
    let v = json(&["kinnunen", "--c", "1", "--r", "2"]);
    assert!(v["timestamp"].as_u64().is_some());
    assert!((v["result"]["p"].as_f64().unwrap() - 2.8392867552141614).abs() < 1e-10);
}

#[test]
fn printed_weight_specs_round_trip() {
    for spec in [
        "pow:-0.5",
        " product: (pow:1) * pow:-1.5 ^ 0.5 ",
        "trunc:abspow:-0.25@0.5",
        "piecewise:[(0,1,0,1);(1,inf,1,1)]",
    ] {
        let v = json(&["constant", "--weight", spec, "--class", "rhinf", "--no-timestamp"]);
        let printed = v["input"]["weight"].as_str().unwrap();
        assert_eq!(parse_weight(printed).unwrap(), parse_weight(spec).unwrap());
        assert_eq!(parse_weight(printed).unwrap().to_string(), printed);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(aprh(&["constant", "--weight", "pow:abc", "--class", "a1"]).status.code(), Some(2));
    assert_eq!(aprh(&["constant", "--class", "a1"]).status.code(), Some(2));
    assert_eq!(aprh(&["constant", "--weight", "pow:1", "--class", "ap"]).status.code(), Some(3));
    assert_eq!(aprh(&["constant", "--weight", "pow:1", "--class", "ap", "--p", "0.5"]).status.code(), Some(3));
    assert_eq!(aprh(&["kinnunen", "--c", "0.5", "--r", "2"]).status.code(), Some(3));
    // A_3.1(x²) ≈ 199 is finite, so a cap of 1.5 cannot be confirmed by growth
    let out = aprh(&["constant", "--weight", "pow:2", "--class", "ap", "--p", "3.1", "--cap", "1.5"]);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["status"], "at-resolution");
    let out = aprh(&["range", "--form", "rh", "--weight", "pow:-0.5", "--u", "pow:0", "--v", "pow:-2", "--r", "1.5"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rejected"));
}

#[test]
fn factorization_ranges() {
    let v = json(&[
        "range", "--form", "ap", "--weight", "pow:1", "--u", "pow:0", "--v", "pow:-0.5", "--p", "3", "--no-timestamp",
    ]);
    let ranges = v["result"]["ranges"].as_array().unwrap();
    let aq = ranges.iter().find(|r| r["class"] == "aq").unwrap();
    assert!((aq["range"]["lo"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert_eq!(aq["range"]["hi"], 3.0);
    assert_eq!(v["result"]["factorization"]["form"], "ap");
    assert_eq!(v["result"]["factorization"]["v"], "pow:-0.5");
}

#[test]
fn cover_saves_and_reloads_grid_sets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.gset");
    let p = path.to_str().unwrap();
    let a = json(&["cover", "--random", "5", "--dim", "2", "--depth", "5", "--save", p, "--no-timestamp"]);
    assert_eq!(a["result"]["valid"], true);
    let b = json(&["cover", "--gridset", p, "--no-timestamp"]);
    assert_eq!(a["result"], b["result"]);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"GSET");

    std::fs::write(&path, b"nope").unwrap();
    assert_eq!(aprh(&["cover", "--gridset", p]).status.code(), Some(3));
}

#[test]
fn out_flag_and_csv_restrictions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = aprh(&[
        "verify-ineq", "--weight", "pow:1", "--interval", "0:1", "--level", "sub", "--lambdas", "8", "--csv", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("lambda,measure,integral,ratio\n"));
    assert_eq!(text.lines().count(), 9);
    assert_eq!(aprh(&["kinnunen", "--c", "1", "--r", "2", "--csv"]).status.code(), Some(3));
}

#[test]
fn moment_check_and_negative_intervals() {
    let v = json(&[
        "verify-ineq", "--weight", "pow:1", "--interval", "0:1", "--level", "moment", "--r", "2.5", "--beta", "0.1",
        "--c", "2", "--no-timestamp",
    ]);
    assert_eq!(v["result"]["applicable"], true);
    assert_eq!(v["result"]["moment_bound_holds"], true);
    let v = json(&["verify-ineq", "--weight", "abspow:-0.5", "--interval", "-1:2", "--lambdas", "32", "--no-timestamp"]);
    assert!(v["result"]["worst_ratio"].as_f64().unwrap() <= 1.0 + 2f64.sqrt());
}
