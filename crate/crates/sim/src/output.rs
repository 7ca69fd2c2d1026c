//! CSV and JSON writers for experiment results.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::experiment::{ExperimentOutput, SummaryRow};
use crate::SimError;

/// Paths written for an output stem `out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub traces: PathBuf,
}

impl OutputPaths {
    pub fn for_stem(stem: &Path) -> Self {
        Self {
            rows: with_suffix(stem, ".csv"),
            summary: with_suffix(stem, ".summary.csv"),
            traces: with_suffix(stem, ".traces.json"),
        }
    }
}

// Appends rather than replaces, so `out/p1.5` keeps its dot.
fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(stem.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outputs(
    stem: &Path,
    output: &ExperimentOutput,
    summary: &[SummaryRow],
) -> Result<OutputPaths, SimError> {
    let paths = OutputPaths::for_stem(stem);
    if let Some(dir) = paths.rows.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_csv(&paths.rows, &output.rows)?;
    write_csv(&paths.summary, summary)?;
    let mut w = BufWriter::new(File::create(&paths.traces)?);
    serde_json::to_writer_pretty(&mut w, &output.traces)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(paths)
}

/// Fixed-width summary table for the terminal.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:>12}  {:<9} {:>6} {:>5} {:>12} {:>10}\n",
        "value", "scheme", "count", "fail", "mean_rate", "stderr"
    );
    for r in summary {
        s.push_str(&format!(
            "{:>12}  {:<9} {:>6} {:>5} {:>12.6} {:>10.6}\n",
            r.sweep_value, r.scheme, r.count, r.failures, r.mean_rate, r.stderr_rate
        ));
    }
    s
}
