use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ap3_core::report::RunReport;
use ap3_core::zp::{io::read_gridfn, PrimeField};

fn ap3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ap3")).args(args).output().unwrap()
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Option<i32>, RunReport) {
    let out = dir.join(format!("{name}.json"));
    let o = ap3(&[args, &["--out", out.to_str().unwrap()]].concat());
    (o.status.code(), RunReport::load(&out).unwrap())
}

fn metric_f64(r: &RunReport, key: &str) -> f64 {
    r.metrics[key].as_f64().unwrap()
}

#[test]
fn minimize_small_density_beats_bound() {
    let dir = tempfile::tempdir().unwrap();
    let fn_out = dir.path().join("f.csv");
    let (code, r) = run_to(
        dir.path(),
        "min",
        &["minimize", "--p", "5", "--theta", "0.2", "--seed", "1", "--fn-out", fn_out.to_str().unwrap()],
    );
    assert_eq!(code, Some(0));
    assert!(metric_f64(&r, "lambda") <= 0.04 + 1e-9);
    let f = read_gridfn(PrimeField::new(5).unwrap(), std::fs::File::open(&fn_out).unwrap()).unwrap();
    assert!((f.mean() - 0.2).abs() < 1e-9);
    assert_eq!(r.params["p"], 5);
    assert_eq!(r.version, ap3_core::report::VERSION);
}

#[test]
fn minimize_full_density() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = run_to(dir.path(), "full", &["minimize", "--p", "7", "--theta", "1.0"]);
    assert_eq!(metric_f64(&r, "lambda"), 1.0);
}

#[test]
fn composite_modulus_is_an_error() {
    let o = ap3(&["minimize", "--p", "9", "--theta", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("composite"));
}

#[test]
fn verify_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    for (p, suite) in [("5", "identities"), ("11", "varnavides"), ("13", "levelprop")] {
        let (code, r) = run_to(dir.path(), suite, &["verify", "--p", p, "--suite", suite]);
        assert_eq!(code, Some(0), "{suite}: {:?}", r.failed());
        assert!(!r.verdicts.is_empty());
    }
    let (_, r) = run_to(dir.path(), "id5", &["verify", "--p", "5", "--suite", "identities"]);
    let complement = r.verdicts.iter().find(|v| v.name == "complement_identity").unwrap();
    assert!(complement.detail.starts_with("32 subsets"));
}

#[test]
fn r3_values_and_certificate_file() {
    let dir = tempfile::tempdir().unwrap();
    let certs: PathBuf = dir.path().join("certs.csv");
    for (n, value) in [("9", 5), ("1", 1), ("2", 2)] {
        let (code, r) = run_to(dir.path(), n, &["r3", "--n", n, "--certs", certs.to_str().unwrap()]);
        assert_eq!(code, Some(0));
        assert_eq!(r.metrics["value"], value);
    }
    let text = std::fs::read_to_string(&certs).unwrap();
    assert!(text.lines().count() > 9);
}

#[test]
fn r3_budget_exhaustion_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let certs = dir.path().join("certs.csv");
    let (code, r) = run_to(dir.path(), "r3", &["r3", "--n", "60", "--budget", "10", "--certs", certs.to_str().unwrap()]);
    assert_eq!(code, Some(1));
    assert!(!r.all_pass());
}

#[test]
fn report_aggregates_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = run_to(dir.path(), "a", &["behrend", "--n", "20"]);
    let (_, b) = run_to(dir.path(), "b", &["verify", "--p", "7", "--suite", "identities"]);
    let files = [dir.path().join("a.json"), dir.path().join("b.json")];
    let (code, agg) = run_to(
        dir.path(),
        "agg",
        &["report", files[0].to_str().unwrap(), files[1].to_str().unwrap()],
    );
    assert_eq!(code, Some(0));
    assert_eq!(agg.verdicts.len(), a.verdicts.len() + b.verdicts.len());
}

#[test]
fn same_seed_same_verdicts_different_seed_different_draws() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["improve", "--p", "53", "--theta", "0.4"];
    let (_, a) = run_to(dir.path(), "a", &[&args[..], &["--seed", "3"]].concat());
    let (_, b) = run_to(dir.path(), "b", &[&args[..], &["--seed", "3"]].concat());
    let (_, c) = run_to(dir.path(), "c", &[&args[..], &["--seed", "4"]].concat());
    assert_eq!(a.verdicts, b.verdicts);
    assert_eq!(a.metrics, b.metrics);
    assert_ne!(a.metrics, c.metrics);
}
