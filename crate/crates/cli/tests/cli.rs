use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dustsim_core::report::{
    strip_comments, ENV_HEADER, EVENTS_HEADER, ORACLE_HEADER, RHO_HEADER, SCHEMA_VERSION,
    SWEEP_HEADER,
};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dustsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GC_SEED")
        .output()
        .unwrap()
}

fn first_data_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&strip_comments(&fs::read_to_string(path).unwrap())).unwrap()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const SIM: &[&str] = &["simulate", "--n", "512", "--alpha", "0.5", "--seed", "3", "--emit-events"];
const SWEEP: &[&str] = &["sweep", "--n", "256,512", "--alpha", "0.4,0.8", "--m", "2,3", "--trials", "6", "--seed", "5"];
const SINGLE: &[&str] = &["singleline", "--k", "2", "--x", "0.5,1", "--trials", "2000", "--delta", "0.2", "--seed", "1"];
const ORACLE: &[&str] = &["oracle", "--h", "0.01", "--x-max", "20", "--tol", "1e-8"];
const ENV: &[&str] = &["envcheck", "--n", "64,256", "--trials", "10", "--seed", "2"];

#[test]
fn reruns_are_byte_identical() {
    for args in [SIM, SWEEP, SINGLE, ORACLE, ENV] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(run(args, a.path()).status.code(), Some(0), "{args:?}");
        assert_eq!(run(args, b.path()).status.code(), Some(0), "{args:?}");
        assert_eq!(read_all(a.path()), read_all(b.path()), "{args:?}");
    }
}

#[test]
fn sweep_ignores_jobs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut with_jobs = SWEEP.to_vec();
    with_jobs.extend(["--jobs", "3"]);
    assert!(run(SWEEP, a.path()).status.success());
    assert!(run(&with_jobs, b.path()).status.success());
    assert_eq!(read_all(a.path()), read_all(b.path()));
}

#[test]
fn headers_and_config_echo() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    run(SIM, p);
    run(SWEEP, p);
    run(ORACLE, p);
    run(ENV, p);
    run(SINGLE, p);
    assert_eq!(first_data_line(&p.join("events.csv")), EVENTS_HEADER);
    assert_eq!(first_data_line(&p.join("rho.csv")), RHO_HEADER);
    assert_eq!(first_data_line(&p.join("sweep.csv")), SWEEP_HEADER);
    assert_eq!(first_data_line(&p.join("oracle.csv")), ORACLE_HEADER);
    assert_eq!(first_data_line(&p.join("env.csv")), ENV_HEADER);
    for name in ["events.csv", "rho.csv", "sweep.csv", "oracle.csv", "env.csv", "summary.json",
        "sweep.json", "oracle.json", "envcheck.json", "singleline.json"]
    {
        let text = fs::read_to_string(p.join(name)).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with(&format!("# {SCHEMA_VERSION} {{")), "{name}: {first}");
    }
    for name in ["summary.json", "sweep.json", "oracle.json", "envcheck.json", "singleline.json"] {
        assert_eq!(json(&p.join(name))["schema"], SCHEMA_VERSION);
    }
}

#[test]
fn simulate_summary_fields() {
    let d = TempDir::new().unwrap();
    run(SIM, d.path());
    let v = json(&d.path().join("summary.json"));
    let r = &v["result"];
    assert!(r.get("theta_hat").is_some() && r.get("a_2").is_some(), "{r}");
    assert_eq!(v["config"]["sim"]["seed"], 3);
    let events = fs::read_to_string(d.path().join("events.csv")).unwrap();
    let rows = events.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows as u64, r["events"].as_u64().unwrap());
}

#[test]
fn oracle_csv_is_monotone() {
    let d = TempDir::new().unwrap();
    run(ORACLE, d.path());
    let text = fs::read_to_string(d.path().join("oracle.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let (x, p) = l.split_once(',').unwrap();
            (x.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert!(rows.len() > 100);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.1)));
}

#[test]
fn envcheck_frequencies_are_probabilities() {
    let d = TempDir::new().unwrap();
    run(ENV, d.path());
    let v = json(&d.path().join("envcheck.json"));
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        for f in r["freqs"].as_array().unwrap() {
            let f = f.as_f64().unwrap();
            assert!((0.0..=1.0).contains(&f));
        }
    }
}

#[test]
fn singleline_reports_band() {
    let d = TempDir::new().unwrap();
    run(SINGLE, d.path());
    let v = json(&d.path().join("singleline.json"));
    let rows = v["result"]["rows"].as_array().unwrap();
    for r in rows {
        let p = r["p_hat"].as_f64().unwrap();
        assert!(r["p_low"].as_f64().unwrap() <= p && p <= r["p_high"].as_f64().unwrap());
    }
    assert!(v["result"]["nonblocking"]["p_hat"].is_number());
}

#[test]
fn config_errors_exit_two() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    assert_eq!(run(&["simulate", "--n", "64", "--alpha", "1.5"], p).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--n", "64", "--alpha", "0.5", "--bogus"], p).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--n", "64", "--alpha", "0.5", "--m", "1"], p).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--h", "-1"], p).status.code(), Some(2));
    assert_eq!(run(&["envcheck", "--n", "8"], p).status.code(), Some(2));
}

#[test]
fn seed_falls_back_to_env() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let base = ["simulate", "--n", "256", "--alpha", "0.5"];
    let out = Command::new(env!("CARGO_BIN_EXE_dustsim"))
        .args(base)
        .arg("--out")
        .arg(a.path())
        .env("GC_SEED", "17")
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut explicit = base.to_vec();
    explicit.extend(["--seed", "17"]);
    run(&explicit, b.path());
    assert_eq!(read_all(a.path()), read_all(b.path()));
    assert_eq!(json(&a.path().join("summary.json"))["config"]["sim"]["seed"], 17);
}
