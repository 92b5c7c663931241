//! Reports and their table/CSV renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cli::config::Format;
use crate::error::{GbcError, Result};
use crate::topology::ZeroRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Pass when `|value − target| ≤ tolerance`.
    Within,
    /// Pass when `|value − target| > tolerance`.
    Exceeds,
}

/// One pass/fail entry of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Check { name: name.into(), value, target, tolerance, relation: Relation::Within, pass }
    }

    pub fn exceeds(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = (value - target).abs() > tolerance;
        Check { name: name.into(), value, target, tolerance, relation: Relation::Exceeds, pass }
    }

    /// A residual that must stay below `tolerance`.
    pub fn residual(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check::within(name, value, 0.0, tolerance)
    }

    pub fn error(&self) -> f64 {
        (self.value - self.target).abs()
    }
}

/// Integrals at one excision radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub epsilon: f64,
    /// `∫` over the excised domain.
    pub base_integral: f64,
    /// `2π ∫`.
    pub normalized: f64,
    /// `∮` around each zero, in the order of [`Report::zeros`].
    pub boundary: Vec<f64>,
    /// `∫ + Σ ∮`.
    pub stokes_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub command: String,
    pub checks: Vec<Check>,
    pub series: Vec<SeriesRow>,
    pub zeros: Vec<ZeroRecord>,
    /// Ordered key/value pairs: configuration echo and quadrature metadata.
    pub metadata: Vec<(String, String)>,
    pub runtime_seconds: f64,
}

impl Report {
    pub fn new(scenario: &str, command: &str) -> Self {
        Report {
            scenario: scenario.into(),
            command: command.into(),
            checks: Vec::new(),
            series: Vec::new(),
            zeros: Vec::new(),
            metadata: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| GbcError::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| GbcError::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| GbcError::Io(std::io::Error::other(e)))
}

/// Pass/fail table as CSV.
pub fn checks_csv(report: &Report) -> Result<String> {
    let header: Vec<String> =
        ["scenario", "check", "value", "target", "error", "tolerance", "relation", "pass"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                report.scenario.clone(),
                c.name.clone(),
                num(c.value),
                num(c.target),
                num(c.error()),
                num(c.tolerance),
                format!("{:?}", c.relation).to_lowercase(),
                c.pass.to_string(),
            ]
        })
        .collect();
    csv_string(&header, &rows)
}

/// Per-radius convergence series as CSV, one row per radius.
pub fn series_csv(report: &Report) -> Result<String> {
    let mut header: Vec<String> =
        ["epsilon", "base_integral", "normalized", "stokes_residual"].map(String::from).to_vec();
    header.extend((0..report.zeros.len()).map(|i| format!("boundary_{i}")));
    let rows: Vec<Vec<String>> = report
        .series
        .iter()
        .map(|r| {
            let mut row = vec![num(r.epsilon), num(r.base_integral), num(r.normalized), num(r.stokes_residual)];
            row.extend(r.boundary.iter().map(|b| num(*b)));
            row
        })
        .collect();
    csv_string(&header, &rows)
}

pub fn zeros_csv(report: &Report) -> Result<String> {
    let header: Vec<String> = ["index", "chart", "x1", "x2", "degree"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = report
        .zeros
        .iter()
        .enumerate()
        .map(|(i, z)| {
            vec![i.to_string(), z.chart.to_string(), num(z.location[0]), num(z.location[1]), z.degree.to_string()]
        })
        .collect();
    csv_string(&header, &rows)
}

pub fn metadata_csv(report: &Report) -> Result<String> {
    let header = vec!["key".to_string(), "value".to_string()];
    let rows: Vec<Vec<String>> = report.metadata.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect();
    csv_string(&header, &rows)
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e6) {
        format!("{v:.6e}")
    } else {
        format!("{v:.10}")
    }
}

/// Human-readable summary.
pub fn table(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} [{}]", report.scenario, report.command);
    for (k, v) in &report.metadata {
        let _ = writeln!(s, "  {k:<24} {v}");
    }
    let _ = writeln!(s, "  {:<24} {:.2} s", "runtime", report.runtime_seconds);
    if !report.zeros.is_empty() {
        let _ = writeln!(s, "\nzeros");
        for (i, z) in report.zeros.iter().enumerate() {
            let _ = writeln!(
                s,
                "  #{i} chart {} at ({:+.6}, {:+.6})  degree {:+}",
                z.chart, z.location[0], z.location[1], z.degree
            );
        }
    }
    if !report.series.is_empty() {
        let _ = writeln!(s, "\n  {:>10} {:>18} {:>12}  boundary", "epsilon", "2π·integral", "stokes");
        for r in &report.series {
            let b: Vec<String> = r.boundary.iter().map(|v| format!("{v:+.8}")).collect();
            let _ = writeln!(s, "  {:>10.4} {:>18.10} {:>12.2e}  {}", r.epsilon, r.normalized, r.stokes_residual, b.join(" "));
        }
    }
    let width = report.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0).max(5);
    let _ = writeln!(s, "\n  {:<width$} {:>16} {:>16} {:>10} {:>10}  result", "check", "value", "target", "error", "tol");
    for c in &report.checks {
        let rel = if c.relation == Relation::Within { "≤" } else { ">" };
        let _ = writeln!(
            s,
            "  {:<width$} {:>16} {:>16} {:>10.2e} {rel}{:>9.1e}  {}",
            c.name,
            short(c.value),
            short(c.target),
            c.error(),
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "\n{}", if report.passed() { "all checks passed" } else { "some checks FAILED" });
    s
}

/// Writes the report files into `dir` (when given) and returns the text for
/// standard output in the requested format. File contents other than the
/// table do not depend on the runtime, so repeated runs give identical CSV.
pub fn emit_report(report: &Report, dir: Option<&Path>, format: Format) -> Result<(String, Vec<PathBuf>)> {
    let mut written = Vec::new();
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            (format!("{}.checks.csv", report.scenario), checks_csv(report)?),
            (format!("{}.meta.csv", report.scenario), metadata_csv(report)?),
            (format!("{}.txt", report.scenario), table(report)),
        ];
        if !report.series.is_empty() {
            files.push((format!("{}.series.csv", report.scenario), series_csv(report)?));
        }
        if !report.zeros.is_empty() {
            files.push((format!("{}.zeros.csv", report.scenario), zeros_csv(report)?));
        }
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    let out = match format {
        Format::Table => table(report),
        Format::Csv => checks_csv(report)?,
    };
    Ok((out, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", "gbc");
        r.meta("metric", "round_sphere");
        r.checks.push(Check::within("gbc", 2.001, 2.0, 1e-2));
        r.checks.push(Check::exceeds("volume_variation", 0.05, 0.0, 1e-4));
        r.zeros.push(ZeroRecord { chart: 0, location: [0.0, 0.0], degree: 1, epsilon_schedule: vec![0.2, 0.1] });
        for (i, e) in [0.2, 0.1].iter().enumerate() {
            r.series.push(SeriesRow {
                epsilon: *e,
                base_integral: 0.3 + i as f64,
                normalized: 1.9,
                boundary: vec![-0.15],
                stokes_residual: 1e-14,
            });
        }
        r
    }

    #[test]
    fn check_relations() {
        assert!(Check::within("a", 1.0, 1.0 + 1e-3, 1e-2).pass);
        assert!(!Check::within("a", 1.0, 1.1, 1e-2).pass);
        assert!(Check::exceeds("b", 1.1, 1.0, 1e-2).pass);
        assert!(!Check::exceeds("b", 1.0, 1.0, 1e-2).pass);
        assert!(!Check::residual("c", f64::NAN, 1.0).pass);
    }

    #[test]
    fn series_has_one_row_per_radius() {
        let r = sample();
        let csv = series_csv(&r).unwrap();
        assert_eq!(csv.lines().count(), 1 + r.series.len());
        assert!(csv.starts_with("epsilon,base_integral,normalized,stokes_residual,boundary_0"));
        assert_eq!(checks_csv(&r).unwrap().lines().count(), 3);
    }

    #[test]
    fn emitted_csv_ignores_runtime() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = sample();
        let (_, a) = emit_report(&r, Some(dir.path()), Format::Csv).unwrap();
        let first: Vec<String> = a.iter().filter(|p| p.extension().unwrap() == "csv").map(|p| std::fs::read_to_string(p).unwrap()).collect();
        r.runtime_seconds = 99.0;
        let (out, b) = emit_report(&r, Some(dir.path()), Format::Csv).unwrap();
        let second: Vec<String> = b.iter().filter(|p| p.extension().unwrap() == "csv").map(|p| std::fs::read_to_string(p).unwrap()).collect();
        assert_eq!(first, second);
        assert_eq!(first.len(), 4);
        assert!(out.contains("volume_variation"));
        assert!(table(&r).contains("all checks passed"));
    }
}
