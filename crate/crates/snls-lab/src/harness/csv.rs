//! CSV emission with a `#`-prefixed header block.
//!
//! Layout: one timestamp line (excluded from reproducibility comparisons),
//! one single-line JSON manifest, optional comment lines (verdicts,
//! diagnostics), then the column header and data rows. Numbers are printed
//! in shortest round-trip form, so identical runs give identical bytes.

use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};

pub struct CsvTable {
    manifest: serde_json::Value,
    comments: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(experiment: &str, seed: u64, paths: usize, grid: (f64, usize)) -> Self {
        let manifest = json!({
            "experiment": experiment,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "paths": paths,
            "grid": { "half_length": grid.0, "points": grid.1 },
        });
        Self {
            manifest,
            comments: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl Into<String>) {
        self.comments.push((key.to_string(), value.into()));
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.columns = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("# timestamp_unix_ms: {now}\n"));
        out.push_str(&format!("# manifest: {}\n", self.manifest));
        for (k, v) in &self.comments {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", parent.display())))?;
        }
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Shortest round-trip formatting; `inf` for infinities.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_bool(v: bool) -> String {
    if v { "true".into() } else { "false".into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_header_then_rows() {
        let mut t = CsvTable::new("demo", 42, 8, (10.0, 64));
        t.comment("verdict", "PASS");
        t.columns(&["a", "b"]);
        t.row(vec![fmt(1.5), fmt(f64::INFINITY)]);
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# timestamp_unix_ms:"));
        assert!(lines[1].starts_with("# manifest:"));
        assert!(lines[1].contains("\"seed\":42"));
        assert_eq!(lines[2], "# verdict: PASS");
        assert_eq!(lines[3], "a,b");
        assert_eq!(lines[4], "1.5,inf");
    }
}
