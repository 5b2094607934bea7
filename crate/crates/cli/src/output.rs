use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const DISTANCES: &str = "distances.json";
pub const SCORES: &str = "scores.json";
pub const DEVIATION: &str = "deviation.json";
pub const BINS: &str = "bins.json";
pub const FILTER_RESULT: &str = "filter_result.json";
pub const BASELINE_RESULT: &str = "baseline_result.json";
pub const FILTERED: &str = "filtered.jsonl";
pub const WEIGHTS: &str = "weights.jsonl";
pub const WEIGHTS_CONFIG: &str = "weights.config.json";
pub const SUBSPACE: &str = "subspace.json";
pub const PCA: &str = "pca.json";
pub const PROJECTIONS: &str = "projections.smat";
pub const VALIDATE: &str = "validate.json";

#[derive(Serialize)]
struct Envelope<'a, T> {
    config: &'a RunConfig,
    result: &'a T,
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Pretty JSON `{"config": ..., "result": ...}` with a trailing newline.
    pub fn write_report<T: Serialize>(
        &self,
        name: &str,
        config: &RunConfig,
        result: &T,
    ) -> Result<PathBuf, CliError> {
        let mut text =
            serde_json::to_string_pretty(&Envelope { config, result }).expect("reports serialize");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        for row in rows {
            text.push_str(&serde_json::to_string(row).expect("records serialize"));
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }
}

pub fn real(x: f64) -> String {
    format!("{x:.6}")
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), real)
}

/// Plain text table; the first column is left-aligned, the rest right-aligned.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    f.write_str("  ")?;
                }
                if i == 0 {
                    write!(f, "{cell:<w$}")?;
                } else {
                    write!(f, "{cell:>w$}")?;
                }
            }
            writeln!(f)
        };
        line(f, &self.header)?;
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(f, &rule)?;
        for row in &self.rows {
            line(f, row)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_aligns_columns() {
        let mut t = Table::new(["id", "value"]);
        t.row(vec!["a".into(), "1.5".into()]);
        t.row(vec!["long-id".into(), "10".into()]);
        let text = t.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id       value");
        assert_eq!(lines[1], "-------  -----");
        assert_eq!(lines[2], "a          1.5");
        assert_eq!(lines[3], "long-id     10");
    }

    #[test]
    fn report_has_config_and_result() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(&dir.path().join("nested")).unwrap();
        let path = out
            .write_report("r.json", &RunConfig::default(), &vec![1, 2])
            .unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(text.ends_with('\n'));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["result"], serde_json::json!([1, 2]));
        assert_eq!(v["config"]["seed"], 0);
    }
}
