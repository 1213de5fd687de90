use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lmc_lab::run::{GLOBAL, INSTANCE_CHECKS};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmc-lab")).args(args).output().expect("spawn lmc-lab")
}

fn run_into(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    lab(&args)
}

#[test]
fn minimal_config_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&config("minimal.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall: PASS"));

    let table = fs::read_to_string(dir.path().join("checks.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    let instance_rows = rows.iter().filter(|l| l.starts_with("flat\t")).count();
    // one instance on one grid
    assert_eq!(instance_rows, INSTANCE_CHECKS.len());
    assert!(rows.iter().any(|l| l.starts_with(GLOBAL)));
    assert_eq!(rows.len(), instance_rows + rows.iter().filter(|l| l.starts_with(GLOBAL)).count());

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["stage"], "pass");
    assert_eq!(json["checks"].as_array().unwrap().len(), rows.len());
    for f in ["u", "theta", "V", "b", "jacobi"] {
        let p = dir.path().join("fields/flat_n33").join(format!("{f}.txt"));
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1 + 33, "{p:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(run_into(&config("minimal.toml"), d.path(), &[]).status.code(), Some(0));
    }
    for f in ["report.json", "checks.tsv", "fields/flat_n33/u.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_sampled_rows_only() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(&config("minimal.toml"), a.path(), &[]);
    run_into(&config("minimal.toml"), b.path(), &["--seed", "7"]);
    let ja: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("report.json")).unwrap()).unwrap();
    let jb: serde_json::Value = serde_json::from_str(&fs::read_to_string(b.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(ja["seed"], 1);
    assert_eq!(jb["seed"], 7);
    assert_eq!(ja["solves"], jb["solves"]);
}

#[test]
fn only_restricts_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&config("minimal.toml"), dir.path(), &["--only", "jacobi"]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("checks.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("flat\t33\tjacobi\t"));
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&dir.path().join("nope.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\n[grid]\nsizes = [32]\n").unwrap();
    assert_eq!(run_into(&cfg, dir.path(), &[]).status.code(), Some(1));
    fs::write(&cfg, "seed = 1\n[grid]\nsizes = [33]\n[[instance]]\nid = \"x\"\nphase = \"spiral\"\nR = 0.4\nr = 0.8\n").unwrap();
    assert_eq!(run_into(&cfg, dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn unsolvable_config_exits_two_with_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(&config("unsolvable.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["stage"], "solver");
    let solve = &json["solves"][0];
    assert_eq!(solve["converged"], false);
    assert!(!solve["history"].as_array().unwrap().is_empty());
}

#[test]
fn failing_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    let text = fs::read_to_string(config("minimal.toml")).unwrap().replace("cutoff_bounds = false", "cutoff_bounds = true");
    fs::write(&cfg, text).unwrap();
    let out = run_into(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let table = fs::read_to_string(dir.path().join("checks.tsv")).unwrap();
    assert!(table.lines().any(|l| l.contains("cutoff_rho_d1") && l.ends_with("false")));
}
