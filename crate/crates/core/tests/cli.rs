use std::path::PathBuf;
use std::process::Command;

use pesin::harness::{parse_records, write_records, Record};

const FIXED_POINT: &str = "system = complex_henon c=-1+0i b=0.3+0i
orbit.source = cycle
orbit.cycle = 1.842686,1.842686
budget.gamma0 = 0.005
near.max_m = 1
near.limit = 1
";

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pesin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn pesin(args: &[&str]) -> (i32, Vec<Record>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pesin")).args(args).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let records = parse_records(&text).unwrap();
    (out.status.code().unwrap(), records, text)
}

#[test]
fn passing_budget() {
    let cfg = scratch("budget.cfg", FIXED_POINT);
    let (code, recs, _) = pesin(&["budget", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].kind, "budget");
    assert_eq!(recs[0].get("pass"), Some("true"));
    assert_eq!(recs[0].config.len(), 64);
}

#[test]
fn failing_budget_and_override() {
    let cfg = scratch("bad.cfg", &format!("{FIXED_POINT}budget.h = 0.2\n"));
    let path = cfg.to_str().unwrap();
    let (code, recs, _) = pesin(&["close", "--config", path]);
    assert_eq!(code, 2);
    assert_eq!(recs.iter().map(|r| r.kind.as_str()).collect::<Vec<_>>(), ["budget", "error"]);
    assert_eq!(recs[1].get("exit"), Some("2"));
    let (code, recs, _) = pesin(&["budget", "--config", path, "--override-budget"]);
    assert_eq!(code, 0);
    assert_eq!(recs[0].get("override"), Some("true"));
}

#[test]
fn fixed_point_certificate() {
    let cfg = scratch("close.cfg", FIXED_POINT);
    let (code, recs, _) = pesin(&["close", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(code, 0);
    let certs: Vec<&Record> = recs.iter().filter(|r| r.kind == "certificate").collect();
    assert_eq!(certs.len(), 1);
    assert!(certs[0].get_f64("residual").unwrap() <= 1e-9);
    assert_eq!(certs[0].get("certified"), Some("true"));
    assert!(recs.iter().all(|r| r.seed == 5));
}

#[test]
fn usage_errors() {
    let (code, recs, _) = pesin(&["frobnicate"]);
    assert_eq!(code, 1);
    assert_eq!(recs[0].kind, "error");
    let (code, recs, _) = pesin(&["lyap", "--config", "/nonexistent/pesin.cfg"]);
    assert_eq!(code, 1);
    assert_eq!(recs[0].kind, "error");
    let cfg = scratch("typo.cfg", "budget.gama = 0.1\n");
    let (code, _, _) = pesin(&["lyap", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    let cfg = scratch("kind.cfg", "system = logistic r=4\n");
    let (code, recs, _) = pesin(&["lyap", "--config", cfg.to_str().unwrap()]);
    assert_eq!((code, recs.last().unwrap().get("exit")), (1, Some("1")));
}

#[test]
fn numerical_failure() {
    let cfg = scratch("norec.cfg", &format!("{FIXED_POINT}budget.eta = 0\n"));
    let (code, recs, _) = pesin(&["close", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(recs.last().unwrap().kind, "error");
}

#[test]
fn out_flag_and_round_trip() {
    let cfg = scratch("out.cfg", FIXED_POINT);
    let dest = cfg.with_file_name("records.txt");
    let (code, recs, stdout) = pesin(&["chart", "--config", cfg.to_str().unwrap(), "--out", dest.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(recs.is_empty() && stdout.is_empty());
    let text = std::fs::read_to_string(&dest).unwrap();
    let parsed = parse_records(&text).unwrap();
    assert_eq!(parsed.iter().filter(|r| r.kind == "chart").count(), 10);
    assert_eq!(write_records(&parsed), text);
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = scratch("det.cfg", FIXED_POINT);
    let path = cfg.to_str().unwrap();
    for sub in ["lyap", "close"] {
        let (_, _, a) = pesin(&[sub, "--config", path, "--seed", "9"]);
        let (_, _, b) = pesin(&[sub, "--config", path, "--seed", "9"]);
        assert_eq!(a, b);
    }
}
