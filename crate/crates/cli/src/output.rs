//! Output plumbing: CSV text to stdout, files and a JSON sidecar under `--out`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mann_bounds::report::fmt_f64;
use mann_bounds::WorstCaseWitness;
use serde_json::Value;

pub const VERIFIED: &str = "witness-verified";
pub const UNCERTIFIED: &str = "uncertified";
pub const FAILED: &str = "witness-failed";

pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
        }
        Ok(Sink { dir: dir.map(Path::to_path_buf) })
    }

    /// Writes `name` under the output directory, if one was given.
    pub fn file(&self, name: &str, content: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }

    pub fn json(&self, name: &str, value: &Value) -> Result<()> {
        self.file(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

/// One row of a residual series.
pub struct SeriesRow {
    pub n: usize,
    pub r: f64,
    pub exact: Option<String>,
    pub method: Option<String>,
}

/// `n,R,inv_R[,R_exact][,method],certificate`.
pub fn series_csv(rows: &[SeriesRow], certificate: &str) -> String {
    let with_exact = rows.iter().any(|r| r.exact.is_some());
    let with_method = rows.iter().any(|r| r.method.is_some());
    let mut out = String::from("n,R,inv_R");
    if with_exact {
        out.push_str(",R_exact");
    }
    if with_method {
        out.push_str(",method");
    }
    out.push_str(",certificate\n");
    for row in rows {
        let _ = write!(out, "{},{},{}", row.n, fmt_f64(row.r), fmt_f64(1.0 / row.r));
        if with_exact {
            let _ = write!(out, ",{}", row.exact.as_deref().unwrap_or(""));
        }
        if with_method {
            let _ = write!(out, ",{}", row.method.as_deref().unwrap_or(""));
        }
        let _ = writeln!(out, ",{certificate}");
    }
    out
}

/// `n,i,weight` for every entry of every row.
pub fn coefficients_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::from("n,i,weight\n");
    for (n, row) in rows.iter().enumerate() {
        for (i, w) in row.iter().enumerate() {
            let _ = writeln!(out, "{n},{i},{}", fmt_f64(*w));
        }
    }
    out
}

/// Certificate label and a JSON summary for an optional witness.
pub fn witness_summary(witness: Option<&WorstCaseWitness>) -> (&'static str, Value) {
    match witness {
        None => (UNCERTIFIED, Value::Null),
        Some(w) => {
            let label = if w.report.passed() { VERIFIED } else { FAILED };
            let summary = serde_json::json!({
                "passed": w.report.passed(),
                "distance_error": w.report.distance_error,
                "residual_error": w.report.residual_error,
                "expansion": w.report.expansion,
            });
            (label, summary)
        }
    }
}
