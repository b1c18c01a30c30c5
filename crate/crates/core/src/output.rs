//! Reports and plot data.
//!
//! Tabular reports are CSV with four decimals; structured reports are TOML
//! with shortest round-trip float formatting; plot data is whitespace
//! separated columns behind a `#` header line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::batch::BatchEntry;
use crate::equilibria::{EquilibriumKind, EquilibriumSet};
use crate::error::{GeacError, Result};
use crate::integrator::{default_escape_bounds, Trajectory};
use crate::model::{PolynomialOscillator, State};
use crate::swing::{Assessment, AssessmentReport, SwingVerdict};

pub const TABLE_HEADER: &str = "swing_index,direction,a_acc,a_dec,a_sur,margin,verdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Structured,
}

fn fixed4(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.4}")
    }
}

fn verdict_name(v: SwingVerdict) -> &'static str {
    match v {
        SwingVerdict::Stable => "Stable",
        SwingVerdict::Unstable => "Unstable",
        SwingVerdict::NeverUnstableThisDirection => "NeverUnstableThisDirection",
    }
}

fn table_rows(report: &AssessmentReport, prefix: &str, out: &mut String) {
    for r in &report.records {
        let _ = writeln!(
            out,
            "{prefix}{},{},{},{},{},{},{}",
            r.swing.index,
            r.swing.direction.letter(),
            fixed4(r.a_acc),
            fixed4(r.a_dec),
            r.a_sur.map(fixed4).unwrap_or_default(),
            fixed4(r.margin),
            verdict_name(r.verdict),
        );
    }
}

/// One row per swing.
pub fn table_report(report: &AssessmentReport) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    table_rows(report, "", &mut out);
    out
}

/// Per-swing rows of every scenario, behind a leading `scenario` column.
/// Failed scenarios get a single row whose verdict column holds `Error`.
pub fn table_batch(entries: &[BatchEntry]) -> String {
    let mut out = format!("scenario,{TABLE_HEADER}\n");
    for e in entries {
        let name = csv_field(&e.name);
        match &e.outcome {
            Ok(a) => table_rows(&a.report, &format!("{name},"), &mut out),
            Err(_) => {
                let _ = writeln!(out, "{name},,,,,,,Error");
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn structured_report(report: &AssessmentReport) -> Result<String> {
    toml::to_string(report).map_err(|e| GeacError::Io(e.to_string()))
}

pub fn parse_structured_report(text: &str) -> Result<AssessmentReport> {
    toml::from_str(text).map_err(|e| GeacError::Parse(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<AssessmentReport>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StructuredBatch {
    #[serde(default)]
    pub entries: Vec<StructuredEntry>,
}

pub fn structured_batch(entries: &[BatchEntry]) -> Result<String> {
    let doc = StructuredBatch {
        entries: entries
            .iter()
            .map(|e| StructuredEntry {
                name: e.name.clone(),
                error: e.outcome.as_ref().err().map(ToString::to_string),
                report: e.outcome.as_ref().ok().map(|a| a.report.clone()),
            })
            .collect(),
    };
    toml::to_string(&doc).map_err(|e| GeacError::Io(e.to_string()))
}

/// `(δ, P_f(δ))` at `n` evenly spaced angles.
pub fn pf_curve(model: &PolynomialOscillator, range: (f64, f64), n: usize) -> Vec<[f64; 2]> {
    linspace(range, n).map(|d| [d, model.p_f(d)]).collect()
}

/// `(t, δ, Δω, P_Δω)` at every accepted step.
pub fn trajectory_rows(model: &PolynomialOscillator, traj: &Trajectory) -> Vec<[f64; 4]> {
    traj.samples()
        .iter()
        .map(|s| [s.t, s.delta, s.omega, model.p_damping(s.omega)])
        .collect()
}

/// `(δ, kind, f'(δ))` with kind 0 = SEP, 1 = UEP, 2 = degenerate.
pub fn equilibria_rows(eq: &EquilibriumSet) -> Vec<[f64; 3]> {
    eq.all
        .iter()
        .map(|e| {
            let kind = match e.kind {
                EquilibriumKind::Sep => 0.0,
                EquilibriumKind::Uep => 1.0,
                EquilibriumKind::Degenerate => 2.0,
            };
            [e.location, kind, e.slope]
        })
        .collect()
}

/// `(δ, Δω, δ̇, Δω̇)` on an `nd × nw` grid, `δ` varying slowest.
pub fn vector_field_grid(
    model: &PolynomialOscillator,
    delta: (f64, f64),
    omega: (f64, f64),
    nd: usize,
    nw: usize,
) -> Vec<[f64; 4]> {
    linspace(delta, nd)
        .flat_map(|d| {
            linspace(omega, nw).map(move |w| {
                let (dd, dw) = model.vector_field(&State::new(0.0, d, w));
                [d, w, dd, dw]
            })
        })
        .collect()
}

fn linspace((lo, hi): (f64, f64), n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n && n > 1 { hi } else { lo + i as f64 * step })
}

pub fn columns<const N: usize>(header: &str, rows: &[[f64; N]]) -> String {
    let mut out = format!("# {header}\n");
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, text)?;
    written.push(path);
    Ok(())
}

/// Writes the report (`.csv` or `.toml`) and the plot data (`_pf.dat`,
/// `_trajectory.dat`, `_equilibria.dat`, `_vector_field.dat`) next to
/// `prefix`. Returns the paths written.
pub fn emit_outputs(
    model: &PolynomialOscillator,
    assessment: &Assessment,
    format: OutputFormat,
    prefix: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let prefix = prefix.as_ref();
    let mut written = Vec::new();
    match format {
        OutputFormat::Table => write(
            with_suffix(prefix, ".csv"),
            &table_report(&assessment.report),
            &mut written,
        )?,
        OutputFormat::Structured => write(
            with_suffix(prefix, ".toml"),
            &structured_report(&assessment.report)?,
            &mut written,
        )?,
    }
    let bounds = default_escape_bounds(&assessment.equilibria);
    write(
        with_suffix(prefix, "_pf.dat"),
        &columns("delta p_f", &pf_curve(model, bounds, 801)),
        &mut written,
    )?;
    write(
        with_suffix(prefix, "_trajectory.dat"),
        &columns(
            "t delta omega p_domega",
            &trajectory_rows(model, &assessment.trajectory),
        ),
        &mut written,
    )?;
    write(
        with_suffix(prefix, "_equilibria.dat"),
        &columns("delta kind slope", &equilibria_rows(&assessment.equilibria)),
        &mut written,
    )?;
    let reach = assessment
        .trajectory
        .samples()
        .iter()
        .map(|s| s.omega.abs())
        .fold(0.0, f64::max);
    let reach = if reach > 0.0 { 1.2 * reach } else { 1.0 };
    write(
        with_suffix(prefix, "_vector_field.dat"),
        &columns(
            "delta omega ddelta domega",
            &vector_field_grid(model, bounds, (-reach, reach), 25, 25),
        ),
        &mut written,
    )?;
    Ok(written)
}

/// Writes the batch report to `prefix.csv` or `prefix.toml`.
pub fn emit_batch(entries: &[BatchEntry], format: OutputFormat, prefix: impl AsRef<Path>) -> Result<PathBuf> {
    let prefix = prefix.as_ref();
    let mut written = Vec::new();
    match format {
        OutputFormat::Table => write(with_suffix(prefix, ".csv"), &table_batch(entries), &mut written)?,
        OutputFormat::Structured => write(with_suffix(prefix, ".toml"), &structured_batch(entries)?, &mut written)?,
    }
    Ok(written.remove(0))
}
