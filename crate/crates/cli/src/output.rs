//! Output artifacts: CSV tables, gnuplot scripts, summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Collects per-experiment artifacts and the pass/fail summary.
pub struct RunOutput {
    dir: PathBuf,
    summary: Vec<(String, bool)>,
    tables: Vec<String>,
}

impl RunOutput {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory `{}`", dir.display()))?;
        // Probe writability up front so failures map to the right exit code.
        let probe = dir.join(".write_probe");
        fs::write(&probe, b"ok")
            .with_context(|| format!("output directory `{}` is not writable", dir.display()))?;
        fs::remove_file(&probe).ok();
        Ok(Self {
            dir: dir.to_path_buf(),
            summary: Vec::new(),
            tables: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing `{}`", path.display()))?;
        Ok(())
    }

    /// CSV with a header row; every cell already formatted.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<String>]) -> Result<()> {
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)?;
        self.tables.push(name.to_string());
        Ok(())
    }

    /// Record one pass/fail line for the summary.
    pub fn check(&mut self, label: &str, pass: bool) {
        println!("{}: {label}", if pass { "PASS" } else { "FAIL" });
        self.summary.push((label.to_string(), pass));
    }

    /// Record an informational line.
    pub fn note(&mut self, label: &str) {
        println!("INFO: {label}");
        self.summary.push((format!("(info) {label}"), true));
    }

    pub fn all_passed(&self) -> bool {
        self.summary.iter().all(|(_, p)| *p)
    }

    /// Write `summary.txt` and a gnuplot script covering the emitted
    /// tables; returns whether all checks passed.
    pub fn finish(mut self, experiment: &str, manifest: &str) -> Result<bool> {
        self.write_text("manifest.txt", manifest)?;
        let mut text = String::new();
        let _ = writeln!(text, "experiment = {experiment}");
        for (label, pass) in &self.summary {
            let _ = writeln!(text, "{} {label}", if *pass { "PASS" } else { "FAIL" });
        }
        let all = self.all_passed();
        let _ = writeln!(text, "result = {}", if all { "PASS" } else { "FAIL" });
        self.write_text("summary.txt", &text)?;

        let mut gp = String::new();
        let _ = writeln!(gp, "# gnuplot script for the `{experiment}` tables");
        let _ = writeln!(gp, "set datafile separator ','");
        let _ = writeln!(gp, "set key autotitle columnhead");
        let _ = writeln!(gp, "set grid");
        for (i, table) in self.tables.iter().enumerate() {
            if i > 0 {
                let _ = writeln!(gp, "pause -1 'press enter for the next plot'");
            }
            let _ = writeln!(gp, "plot '{table}' using 1:2 with linespoints");
        }
        self.write_text("plot.gp", &gp)?;
        Ok(all)
    }
}

/// Canonical float formatting used in all tables: enough digits to be
/// lossless for the values we emit, and stable across runs.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.9}")
    }
}
