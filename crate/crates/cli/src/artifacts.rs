use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

/// A CSV file with one description per column, listed in `report.json`.
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>, columns: &[(&'static str, &'static str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut s = self.columns.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// Everything a run produces, held in memory until the run finishes.
pub struct Artifacts {
    hash: String,
    lines: Vec<String>,
    tables: Vec<CsvTable>,
    results: Map<String, Value>,
    violations: Vec<String>,
}

impl Artifacts {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            hash: config.hash(),
            lines: Vec::new(),
            tables: Vec::new(),
            results: Map::new(),
            violations: Vec::new(),
        }
    }

    pub fn line(&mut self, check: &str, text: impl AsRef<str>) {
        self.lines.push(format!("[{}] {check}: {}", self.hash, text.as_ref()));
    }

    /// Records a line and marks the run as violating an invariant.
    pub fn violation(&mut self, check: &str, text: impl AsRef<str>) {
        self.line(check, format!("VIOLATION {}", text.as_ref()));
        self.violations.push(format!("{check}: {}", text.as_ref()));
    }

    pub fn check(&mut self, check: &str, ok: bool, text: impl AsRef<str>) {
        if ok {
            self.line(check, format!("ok {}", text.as_ref()));
        } else {
            self.violation(check, text);
        }
    }

    pub fn table(&mut self, table: CsvTable) {
        self.tables.push(table);
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("results serialize");
        self.results.insert(key.to_string(), v);
    }

    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }

    /// Writes `summary.txt`, the CSV files and `report.json` into `dir`.
    pub fn write(mut self, dir: &Path, config: &ExperimentConfig, exit_code: i32) -> std::io::Result<Vec<String>> {
        let status = if self.violations.is_empty() {
            "ok"
        } else {
            "invariant violation"
        };
        self.line("status", status);
        let csv: Map<String, Value> = self
            .tables
            .iter()
            .map(|t| {
                let cols: Map<String, Value> = t.columns.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
                (
                    format!("{}.csv", t.name),
                    json!({ "rows": t.rows.len(), "columns": cols }),
                )
            })
            .collect();
        let mut cfg = config.clone();
        cfg.out = Default::default();
        let report = json!({
            "command": config.command.map(|c| c.name()),
            "config": cfg,
            "config_hash": self.hash,
            "status": status,
            "exit_code": exit_code,
            "violations": self.violations,
            "results": Value::Object(std::mem::take(&mut self.results)),
            "csv": csv,
        });
        fs::create_dir_all(dir)?;
        for t in &self.tables {
            fs::write(dir.join(format!("{}.csv", t.name)), t.render())?;
        }
        let mut summary = self.lines.join("\n");
        summary.push('\n');
        fs::write(dir.join("summary.txt"), summary)?;
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        fs::write(dir.join("report.json"), text)?;
        Ok(self.lines)
    }
}
