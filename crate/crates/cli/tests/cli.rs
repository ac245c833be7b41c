//! End-to-end runs of the `fpp` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fpp");

fn fpp(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(file)).unwrap()
}

const CONSTANT_M: &str = r#"
schema = 1
seed = 3

[media.flat]
kind = "iid-undirected"
d = 2
distribution = { type = "constant", value = 2.5 }

[[jobs]]
name = "m"
command = "estimate-m"
medium = "flat"
directions = [[1.0, 0.0]]
n = [20]
replicas = 2
output = "m.csv"
"#;

const SYM_1D: &str = r#"
schema = 1

[media.two]
kind = "hyperplane-symmetric"
d = 1
distribution = { type = "atoms", values = [[1.0], [2.0]], probs = [0.5, 0.5] }

[[jobs]]
name = "sym"
command = "sym-minimize"
medium = "two"
p = [1.0]
"#;

#[test]
fn constant_medium_time_constant_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(dir.path(), CONSTANT_M, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(dir.path(), "m.csv");
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let row = rows.records().next().unwrap().unwrap();
    let m_col = headers.iter().position(|h| h == "m").unwrap();
    assert_eq!(row[m_col].parse::<f64>().unwrap(), 2.5);
    assert_eq!(&row[headers.iter().position(|h| h == "direction").unwrap()], "1.0000000000000000e0;0.0000000000000000e0");
}

#[test]
fn sym_minimize_two_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(dir.path(), SYM_1D, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let line = read(dir.path(), "sym.jsonl");
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(format!("{:.6}", v["hbar"].as_f64().unwrap()), "0.666667");
    assert_eq!(v["corrector"], true);
    assert_eq!(v["schema"], 1);
    let keys: Vec<&str> = line.split("\":").map(|s| s.rsplit('"').next().unwrap()).collect();
    assert_eq!(&keys[..5], &["schema", "job", "p", "method", "hbar"]);
}

#[test]
fn missing_medium_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
schema = 1
[media.table]
kind = "explicit"
d = 2
table = "no-such-file.csv"
[[jobs]]
command = "simulate-fpp"
medium = "table"
radius = 1
"#;
    let o = fpp(dir.path(), cfg, &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-file.csv"));
}

#[test]
fn explicit_medium_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("x1,x2,direction,weight\n");
    for x in 0..3 {
        for y in 0..3 {
            if x < 2 {
                table += &format!("{x},{y},+1,1.5\n");
            }
            if y < 2 {
                table += &format!("{x},{y},+2,0.5\n");
            }
        }
    }
    std::fs::write(dir.path().join("weights.csv"), table).unwrap();
    let cfg = r#"
schema = 1
[media.table]
kind = "explicit"
d = 2
table = "weights.csv"
[[jobs]]
command = "simulate-fpp"
medium = "table"
radius = 1
source = [1, 1]
targets = [[2, 2], [0, 1]]
"#;
    let o = fpp(dir.path(), cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let times: Vec<f64> = read(dir.path(), "job0.jsonl")
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["time"].as_f64().unwrap())
        .collect();
    assert_eq!(times, vec![2.0, 1.5]);
}

#[test]
fn empty_config_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(dir.path(), "", &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = fpp(dir.path(), "schema = 1\n", &[]);
    assert_eq!(code(&o), 2);
    let o = Command::new(BIN).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn negative_tolerance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(dir.path(), CONSTANT_M, &["--set", "tolerances.stationary=-1"]);
    assert_eq!(code(&o), 2);
    let o = fpp(dir.path(), CONSTANT_M, &["validate", "--set", "tolerances.brute_force=-1"]);
    assert_eq!(code(&o), 2);
    let o = fpp(dir.path(), SYM_1D, &["--set", "jobs.0.tol=-1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_parameters_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for set in ["jobs.0.bogus=1", "jobs.0.medium=\"nope\"", "jobs.0.p=[1.0, 2.0]", "jobs.0.command=\"launch\""] {
        let o = fpp(dir.path(), SYM_1D, &["--set", set]);
        assert_eq!(code(&o), 2, "{set}");
    }
    assert!(!dir.path().join("out").join("sym.jsonl").exists());
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(dir.path(), CONSTANT_M, &["--set", "jobs.0.expect={ value = 2.4, tol = 1e-3 }"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected 2.4"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "run-manifest.json")).unwrap();
    assert_eq!(manifest["jobs"][0]["status"], "failed");
}

#[test]
fn outputs_are_reproducible_and_worker_independent() {
    let cfg = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/demo.toml")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&fpp(a.path(), &cfg, &["--jobs", "1"])), 0);
    assert_eq!(code(&fpp(b.path(), &cfg, &["--jobs", "3"])), 0);
    let mut files: Vec<_> = std::fs::read_dir(a.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.len() > 10);
    for f in files.iter().filter(|f| *f != "run-manifest.json") {
        let f = f.to_str().unwrap();
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
    let ma: serde_json::Value = serde_json::from_str(&read(a.path(), "run-manifest.json")).unwrap();
    let mb: serde_json::Value = serde_json::from_str(&read(b.path(), "run-manifest.json")).unwrap();
    assert_eq!(ma["config_digest"], mb["config_digest"]);
    assert_eq!(ma["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(ma["workers"], 1);

    // The effective config re-runs to the same bytes.
    let c = tempfile::tempdir().unwrap();
    let effective = read(a.path(), "effective-config.toml");
    assert_eq!(code(&fpp(c.path(), &effective, &[])), 0);
    assert_eq!(read(a.path(), "passage.jsonl"), read(c.path(), "passage.jsonl"));
    let mc: serde_json::Value = serde_json::from_str(&read(c.path(), "run-manifest.json")).unwrap();
    assert_eq!(ma["config_digest"], mc["config_digest"]);
}

#[test]
fn seed_flag_changes_random_outputs() {
    let cfg = r#"
schema = 1
[media.u]
kind = "iid-undirected"
d = 2
distribution = { type = "uniform", lo = 1.0, hi = 2.0 }
[[jobs]]
command = "simulate-fpp"
medium = "u"
radius = 3
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&fpp(a.path(), cfg, &["--seed", "1"])), 0);
    assert_eq!(code(&fpp(b.path(), cfg, &["--seed", "2"])), 0);
    assert_ne!(read(a.path(), "job0.jsonl"), read(b.path(), "job0.jsonl"));
}

#[test]
fn validate_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(dir.path(), "schema = 1\n", &["validate", "--criteria", "3,8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.starts_with("criterion 3 PASS")));
    assert!(out.lines().any(|l| l.starts_with("criterion 8 PASS")));
}

#[test]
fn validate_job_reports_failing_clauses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "schema = 1\n[[jobs]]\ncommand = \"validate\"\ncriteria = [5]\n";
    let o = fpp(dir.path(), cfg, &[]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(read(dir.path(), "job0.jsonl").trim()).unwrap();
    assert_eq!(v["pass"], false);
    assert_eq!(v["failed"][0], "|xi| < 1");
}
