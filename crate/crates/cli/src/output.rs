//! CSV and JSON sidecar emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{Context, Result};
use serde_json::json;

use crate::config::ExperimentSpec;
use crate::experiments::{Cell, Table};

/// Rounds to 9 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let mag = rounded.abs();
    if !(1e-5..1e16).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Text(s) => s.clone(),
        Cell::Int(i) => i.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Empty => String::new(),
    }
}

pub fn csv_bytes(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.cells.iter().map(format_cell))?;
    }
    Ok(w.into_inner()?)
}

pub fn output_paths(dir: &Path, table_name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{table_name}.csv")), dir.join(format!("{table_name}.json")))
}

/// Fails early if `dir` cannot hold the results.
pub fn preflight(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `<experiment>.csv` and its `<experiment>.json` sidecar into `dir`.
pub fn emit_results(table: &Table, spec: &ExperimentSpec, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    anyhow::ensure!(!table.rows.is_empty(), "result table is empty");
    let (csv_path, json_path) = output_paths(dir, table.experiment.name());
    fs::write(&csv_path, csv_bytes(table)?).with_context(|| format!("writing {}", csv_path.display()))?;
    let sidecar = json!({
        "spec": spec,
        "seed": spec.seed,
        "git_describe": git_describe(),
        "columns": table.columns,
        "rows": table.rows.iter().map(|r| &r.meta).collect::<Vec<_>>(),
    });
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)
        .with_context(|| format!("writing {}", json_path.display()))?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(0.1234567891), "0.123456789");
        assert_eq!(format_float(123456789012.0), "123456789000");
        assert_eq!(format_float(-1.5), "-1.5");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(2.0 / 3.0), "0.666666667");
        assert_eq!(format_float(1e-20 / 3.0), "3.33333333e-21");
        assert_eq!(format_float(f64::NAN), "nan");
    }
}
