//! Report files: `checks.tsv`, `report.json` and `fields/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lmc_core::grid::ScalarField;

use crate::error::{LabError, Result};
use crate::run::{RunOutcome, RunReport};

pub const TABLE_HEADER: &str = "instance\tn\tcheck\tlhs\trhs\tdefect\tlocation\tpass";

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|source| LabError::Write { path, source })
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| LabError::Write { path: path.into(), source })
}

/// Tab-separated check table, one row per check.
pub fn check_table(report: &RunReport) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for c in &report.checks {
        let n = c.n.map_or_else(|| "-".to_string(), |n| n.to_string());
        let loc = c.location.map_or_else(|| "-".to_string(), |(i, j)| format!("{i},{j}"));
        let _ = writeln!(
            out,
            "{}\t{n}\t{}\t{:e}\t{:e}\t{:e}\t{loc}\t{}",
            c.instance, c.check, c.lhs, c.rhs, c.defect, c.pass
        );
    }
    out
}

/// Machine-readable aggregate. Contains no timings, so identical inputs give
/// identical bytes.
pub fn report_json(report: &RunReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Plain-text grid: a header line `nx ny h ox oy`, then one line per row
/// `j` holding the values for increasing `i`.
pub fn field_text(f: &ScalarField) -> String {
    let g = f.grid();
    let n = g.n();
    let [ox, oy] = g.origin();
    let mut out = format!("{n} {n} {:e} {:e} {:e}\n", g.h(), ox, oy);
    for j in 0..n {
        let line: Vec<String> = (0..n).map(|i| format!("{:e}", f.at(i, j))).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Writes all report files into `dir`; field dumps only when `dump_fields`.
pub fn emit_reports(outcome: &RunOutcome, dir: &Path, dump_fields: bool) -> Result<()> {
    mkdir(dir)?;
    write(dir.join("checks.tsv"), &check_table(&outcome.report))?;
    write(dir.join("report.json"), &report_json(&outcome.report)?)?;
    if dump_fields {
        for s in &outcome.solved {
            let sub = dir.join("fields").join(format!("{}_n{}", sanitize(&s.instance), s.n));
            mkdir(&sub)?;
            for (name, f) in s.fields() {
                write(sub.join(format!("{name}.txt")), &field_text(&f))?;
            }
        }
    }
    Ok(())
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Human-readable summary for the terminal.
pub fn summary(report: &RunReport) -> String {
    let mut out = String::new();
    for s in &report.solves {
        let _ = writeln!(
            out,
            "solve {:<12} n={:<4} {} residual={:.3e} newton={} krylov={}",
            s.instance,
            s.n,
            if s.converged { "ok  " } else { "FAIL" },
            s.residual_sup,
            s.iterations,
            s.krylov_iterations
        );
    }
    for c in &report.checks {
        let n = c.n.map_or_else(String::new, |n| format!("n={n}"));
        let _ = writeln!(
            out,
            "{} {:<12} {:<6} {:<22} defect={:.3e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.instance,
            n,
            c.check,
            c.defect
        );
    }
    if !report.convergence.is_empty() {
        let _ = writeln!(out, "\n{:<12} {:>5} {:>10} {:>12} {:>7}  reference", "instance", "n", "h", "error", "order");
        for r in &report.convergence {
            let err = r.error.map_or_else(|| "-".into(), |e| format!("{e:.3e}"));
            let ord = r.order.map_or_else(|| "-".into(), |o| format!("{o:.3}"));
            let _ = writeln!(out, "{:<12} {:>5} {:>10.3e} {:>12} {:>7}  {}", r.instance, r.n, r.h, err, ord, r.reference);
        }
    }
    for m in &report.messages {
        let _ = writeln!(out, "{m}");
    }
    let _ = writeln!(out, "\noverall: {}", if report.pass { "PASS" } else { "FAIL" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::{CheckRow, Stage};
    use lmc_core::grid::Grid;

    fn empty() -> RunReport {
        RunReport {
            seed: 0,
            solves: vec![],
            checks: vec![],
            convergence: vec![],
            pass: true,
            stage: Stage::Pass,
            messages: vec![],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(check_table(&empty()), format!("{TABLE_HEADER}\n"));
    }

    #[test]
    fn one_row() {
        let mut r = empty();
        r.checks.push(CheckRow {
            instance: "a".into(),
            n: Some(33),
            check: "jacobi".into(),
            lhs: 1.0,
            rhs: 2.0,
            defect: 1.0,
            location: Some((3, 4)),
            tolerance: 0.1,
            pass: true,
            notes: vec![],
        });
        let t = check_table(&r);
        assert_eq!(t.lines().count(), 2);
        assert_eq!(t.lines().nth(1).unwrap(), "a\t33\tjacobi\t1e0\t2e0\t1e0\t3,4\ttrue");
    }

    #[test]
    fn field_header() {
        let g = Grid::new([-1.0, -1.0], [2.0, 2.0], 9).unwrap();
        let f = ScalarField::from_fn(g, |[x, y]| x + 10.0 * y);
        let t = field_text(&f);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "9 9 2.5e-1 -1e0 -1e0");
        assert!(lines[1].starts_with("-1.1e1 -1.075e1 "), "{}", lines[1]);
        assert!(lines[9].ends_with(" 1.1e1"), "{}", lines[9]);
        assert_eq!(lines.len(), 10);
    }
}
