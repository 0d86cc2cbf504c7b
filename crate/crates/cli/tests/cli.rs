use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SPEC: &str = r#"{"within":[{"term":"EdgesPos"},{"term":"EdgesNeg"},{"term":"GWESEPos","omega":0.2}]}"#;
const COEFFS: &str = r#"{"within":[-1.5,-2.0,0.3],"between":[-3.5,-3.0]}"#;

fn sergm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sergm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = sergm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Spec, coefficients, three blocks of 20 and a simulated network.
fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.json"), SPEC).unwrap();
    fs::write(dir.path().join("c.json"), COEFFS).unwrap();
    let z: String = (0..60).map(|i| format!("{}\t{}\n", i + 1, i / 20 + 1)).collect();
    fs::write(dir.path().join("z.tsv"), z).unwrap();
    ok(
        dir.path(),
        &["simulate", "--spec", "spec.json", "--coeffs", "c.json", "--blocks", "z.tsv", "--seed", "7", "--out", "net.tsv"],
    );
    dir
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&read(dir, name)).unwrap()
}

#[test]
fn version_reports_format() {
    let out = ok(Path::new("."), &["--version"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), format!("sergm {} (format {})", env!("CARGO_PKG_VERSION"), sergm::FORMAT_VERSION));
}

#[test]
fn simulate_writes_edge_list_and_record() {
    let dir = fixture();
    let d = dir.path();
    let text = String::from_utf8(read(d, "net.tsv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N=60"));
    for line in lines {
        let f: Vec<i64> = line.split('\t').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f.len(), 3);
        assert!(1 <= f[0] && f[0] < f[1] && f[1] <= 60);
        assert!(f[2] == 1 || f[2] == -1);
    }
    let record = json(d, "net.tsv.config.json");
    assert_eq!(record["command"], "simulate");
    assert_eq!(record["config"]["seed"], 7);
    assert_eq!(record["format_version"], sergm::FORMAT_VERSION);
}

#[test]
fn simulate_missing_spec_is_usage_error() {
    let dir = fixture();
    let out = sergm(dir.path(), &["simulate", "--coeffs", "c.json", "--blocks", "z.tsv", "--out", "x.tsv"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--spec") && err.contains("Usage"), "{err}");
    assert!(!dir.path().join("x.tsv").exists());
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = fixture();
    let out = sergm(
        dir.path(),
        &["simulate", "--spec", "spec.json", "--coeffs", "c.json", "--blocks", "z.tsv", "--out", "no/such/dir/x.tsv"],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn simulate_is_deterministic() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["simulate", "--spec", "spec.json", "--coeffs", "c.json", "--blocks", "z.tsv", "--seed", "7", "--out", "again.tsv"]);
    assert_eq!(read(d, "net.tsv"), read(d, "again.tsv"));
    ok(d, &["simulate", "--spec", "spec.json", "--coeffs", "c.json", "--blocks", "z.tsv", "--seed", "8", "--out", "other.tsv"]);
    assert_ne!(read(d, "net.tsv"), read(d, "other.tsv"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = fixture();
    let d = dir.path();
    fs::write(
        d.join("run.json"),
        r#"{"spec":"spec.json","coeffs":"c.json","blocks":"z.tsv","seed":8,"out":"from_file.tsv"}"#,
    )
    .unwrap();
    ok(d, &["simulate", "--config", "run.json", "--seed", "7"]);
    assert_eq!(read(d, "from_file.tsv"), read(d, "net.tsv"));
    assert_eq!(json(d, "from_file.tsv.config.json")["config"]["seed"], 7);
    fs::write(d.join("bad.json"), r#"{"sede": 1}"#).unwrap();
    assert_eq!(code(&sergm(d, &["simulate", "--config", "bad.json"])), 2);
}

#[test]
fn fit_outputs() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["fit", "--network", "net.tsv", "--spec", "spec.json", "--k", "3", "--godambe-r", "10", "--out", "fit"]);
    let fit = json(d, "fit/fit.json");
    assert_eq!(fit["k"], 3);
    assert_eq!(fit["within"]["beta"].as_array().unwrap().len(), 3);
    assert_eq!(fit["within"]["covariance_kind"], "Godambe");
    assert_eq!(fit["between"]["beta"].as_array().unwrap().len(), 2);
    let coeffs = json(d, "fit/coefficients.json");
    assert_eq!(coeffs["within"], fit["within"]["beta"]);
    let blocks = String::from_utf8(read(d, "fit/blocks.tsv")).unwrap();
    assert_eq!(blocks.lines().count(), 60);
    let alpha = String::from_utf8(read(d, "fit/alpha.csv")).unwrap();
    assert!(alpha.lines().filter(|l| !l.is_empty()).count() >= 60);
    assert!(String::from_utf8(read(d, "fit/mm_log.csv")).unwrap().starts_with("iter,lb,delta,seconds"));
    assert_eq!(json(d, "fit/config.json")["config"]["godambe_r"], 10);
    let out = ok(d, &["phi", "--truth", "z.tsv", "--estimate", "fit/blocks.tsv"]);
    let phi: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(phi > 0.5, "phi {phi}");
}

#[test]
fn fit_with_known_blocks_skips_step_one() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["fit", "--network", "net.tsv", "--spec", "spec.json", "--blocks", "z.tsv", "--godambe-r", "0", "--out", "fit"]);
    let fit = json(d, "fit/fit.json");
    assert!(fit["variational"].is_null());
    assert_eq!(fit["within"]["covariance_kind"], "Fisher");
    assert!(!d.join("fit/alpha.csv").exists());
}

#[test]
fn fit_validation_errors() {
    let dir = fixture();
    let d = dir.path();
    assert_eq!(code(&sergm(d, &["fit", "--network", "net.tsv", "--spec", "spec.json", "--out", "fit"])), 2);
    assert_eq!(code(&sergm(d, &["fit", "--network", "net.tsv", "--spec", "spec.json", "--k", "0", "--out", "fit"])), 2);
    assert_eq!(code(&sergm(d, &["fit", "--network", "missing.tsv", "--spec", "spec.json", "--k", "3", "--out", "fit"])), 2);
    fs::write(d.join("broken.tsv"), "N=3\n1\t2\t5\n").unwrap();
    let out = sergm(d, &["fit", "--network", "broken.tsv", "--spec", "spec.json", "--k", "2", "--out", "fit"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));
    assert_eq!(
        code(&sergm(d, &["fit", "--network", "net.tsv", "--spec", "spec.json", "--k", "3", "--init", "magic", "--out", "fit"])),
        2
    );
}

#[test]
fn fit_is_deterministic_across_thread_counts() {
    let dir = fixture();
    let d = dir.path();
    let args = ["fit", "--network", "net.tsv", "--spec", "spec.json", "--k", "3", "--godambe-r", "10", "--seed", "4"];
    ok(d, &[&args[..], &["--out", "a", "--threads", "1"]].concat());
    ok(d, &[&args[..], &["--out", "b", "--threads", "3"]].concat());
    for name in ["fit.json", "coefficients.json", "blocks.tsv", "alpha.csv"] {
        assert_eq!(read(d, &format!("a/{name}")), read(d, &format!("b/{name}")), "{name}");
    }
    assert_eq!(code(&sergm(d, &[&args[..], &["--out", "c", "--threads", "0"]].concat())), 2);
}

#[test]
fn uq_outputs_and_determinism() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["fit", "--network", "net.tsv", "--spec", "spec.json", "--k", "3", "--godambe-r", "0", "--out", "fit"]);
    let args = ["uq", "--network", "net.tsv", "--spec", "spec.json", "--alpha", "fit/alpha.csv", "--T", "4", "--godambe-r", "5"];
    ok(d, &[&args[..], &["--out", "a"]].concat());
    ok(d, &[&args[..], &["--out", "b"]].concat());
    assert_eq!(read(d, "a/pooled.json"), read(d, "b/pooled.json"));
    let pooled = json(d, "a/pooled.json");
    assert_eq!(pooled["requested"], 4);
    assert_eq!(pooled["within"]["mean"].as_array().unwrap().len(), 3);
    assert_eq!(json(d, "a/config.json")["config"]["t"], 4);
}

#[test]
fn uq_validation_errors() {
    let dir = fixture();
    let d = dir.path();
    assert_eq!(code(&sergm(d, &["uq", "--network", "net.tsv", "--spec", "spec.json", "--out", "u"])), 2);
    assert_eq!(
        code(&sergm(d, &["uq", "--network", "net.tsv", "--spec", "spec.json", "--k", "3", "--T", "1", "--out", "u"])),
        2
    );
    assert_eq!(
        code(&sergm(d, &["uq", "--network", "net.tsv", "--spec", "spec.json", "--k", "3", "--T", "many", "--out", "u"])),
        2
    );
}

#[test]
fn gof_outputs_and_determinism() {
    let dir = fixture();
    let d = dir.path();
    let args = [
        "gof", "--network", "net.tsv", "--spec", "spec.json", "--blocks", "z.tsv", "--coeffs", "c.json", "--n-sims", "10", "--loo",
        "--loo-sims", "5", "--seed", "3",
    ];
    ok(d, &[&args[..], &["--out", "a"]].concat());
    ok(d, &[&args[..], &["--out", "b"]].concat());
    for name in ["gof.csv", "gof.json", "loo.csv", "loo.json"] {
        assert_eq!(read(d, &format!("a/{name}")), read(d, &format!("b/{name}")), "{name}");
    }
    let csv = String::from_utf8(read(d, "a/gof.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("family,value,count,replication"));
    let mut replications = std::collections::BTreeSet::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 4);
        f[1].parse::<usize>().unwrap();
        f[2].parse::<usize>().unwrap();
        replications.insert(f[3].parse::<usize>().unwrap());
    }
    assert_eq!(replications.len(), 11);
    let summary = json(d, "a/gof.json");
    assert_eq!(summary["families"].as_array().unwrap().len(), 6);
    let loo = json(d, "a/loo.json");
    assert_eq!(loo.as_array().unwrap().len(), 3);
    assert!(String::from_utf8(read(d, "a/loo.csv")).unwrap().starts_with("block,family,value,count,replication"));
}

#[test]
fn gof_validation_errors() {
    let dir = fixture();
    let d = dir.path();
    let base = ["gof", "--network", "net.tsv", "--spec", "spec.json", "--blocks", "z.tsv", "--out", "g"];
    assert_eq!(code(&sergm(d, &base)), 2);
    assert_eq!(code(&sergm(d, &[&base[..], &["--coeffs", "c.json", "--n-sims", "0"]].concat())), 2);
    fs::write(d.join("short.json"), r#"{"within":[-1.0],"between":[-3.0,-3.0]}"#).unwrap();
    assert_eq!(code(&sergm(d, &[&base[..], &["--coeffs", "short.json"]].concat())), 2);
}

#[test]
fn phi_prints_single_value() {
    let dir = fixture();
    let d = dir.path();
    let relabeled: String = (0..60).map(|i| format!("{}\t{}\n", i + 1, 3 - i / 20)).collect();
    fs::write(d.join("r.tsv"), relabeled).unwrap();
    let first = ok(d, &["phi", "--truth", "z.tsv", "--estimate", "r.tsv"]);
    let second = ok(d, &["phi", "--truth", "z.tsv", "--estimate", "r.tsv"]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(String::from_utf8(first.stdout).unwrap().trim(), "1");
    assert!(first.stderr.is_empty());
}

#[test]
fn phi_validation_errors() {
    let dir = fixture();
    let d = dir.path();
    assert_eq!(code(&sergm(d, &["phi", "--truth", "z.tsv"])), 2);
    assert_eq!(code(&sergm(d, &["phi", "--truth", "z.tsv", "--estimate", "nope.tsv"])), 2);
    fs::write(d.join("small.tsv"), "1\t1\n2\t2\n").unwrap();
    assert_eq!(code(&sergm(d, &["phi", "--truth", "z.tsv", "--estimate", "small.tsv"])), 2);
    assert_eq!(code(&sergm(d, &["phi", "--bogus"])), 2);
}

#[test]
fn phi_record_on_request() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["phi", "--truth", "z.tsv", "--estimate", "z.tsv", "--record", "phi.json"]);
    let record = json(d, "phi.json");
    assert_eq!(record["command"], "phi");
    assert_eq!(record["config"]["estimate"], "z.tsv");
}
