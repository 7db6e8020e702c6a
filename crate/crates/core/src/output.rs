//! Deterministic CSV and JSON emission with atomic replacement.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::level_set::LevelSetTrace;
use crate::linear_solver::DiagnosticPoint;

/// Fixed scientific notation with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Builds a CSV body from a header and rows of preformatted cells.
pub fn csv<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = String::with_capacity(1024);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `t,x,u` in long format.
pub fn snapshots_csv(grid: &Grid, fields: &[Field]) -> String {
    let mut out = String::from("t,x,u\n");
    for f in fields {
        let t = num(f.time);
        for (x, u) in grid.xs().zip(&f.values) {
            let _ = writeln!(out, "{t},{},{}", num(x), num(*u));
        }
    }
    out
}

/// `t,D,S` with the two diagnostics sampled at the same times.
pub fn diagnostics_csv(d: &[DiagnosticPoint], s: &[DiagnosticPoint]) -> String {
    csv(
        "t,D,S",
        d.iter().zip(s).map(|(a, b)| [num(a.t), num(a.value), num(b.value)]),
    )
}

/// `t,beta,m_minus,m_plus,attained`; missing crossings are written as `nan`.
pub fn level_sets_csv(trace: &LevelSetTrace) -> String {
    let cell = |m: Option<f64>| m.map_or_else(|| "nan".to_string(), num);
    csv(
        "t,beta,m_minus,m_plus,attained",
        trace
            .times
            .iter()
            .zip(&trace.m_minus)
            .zip(&trace.m_plus)
            .map(|((&t, &a), &b)| {
                [
                    num(t),
                    num(trace.beta),
                    cell(a),
                    cell(b),
                    u8::from(a.is_some()).to_string(),
                ]
            }),
    )
}
