//! Machine-readable run records: assertions, scalar outputs and CSV tables.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shorthand for a table row of numbers, printed with round-trip precision.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(format!("{}", $x)),*] };
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Map<String, serde_json::Value>,
    pub assertions: Vec<Assertion>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(suite: &str, inputs: impl Serialize) -> Self {
        Report {
            suite: suite.into(),
            inputs: serde_json::to_value(inputs).unwrap_or(serde_json::Value::Null),
            ..Default::default()
        }
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) {
        self.outputs.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    /// Records `value <= tolerance`.
    pub fn check_le(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> bool {
        let passed = value <= tolerance;
        self.assertions.push(Assertion { name: name.into(), passed, value, tolerance, detail: detail.into() });
        passed
    }

    /// Records `value >= bound`.
    pub fn check_ge(&mut self, name: &str, value: f64, bound: f64, detail: impl Into<String>) -> bool {
        let passed = value >= bound;
        self.assertions.push(Assertion { name: name.into(), passed, value, tolerance: bound, detail: detail.into() });
        passed
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        let value = if passed { 1.0 } else { 0.0 };
        self.assertions.push(Assertion { name: name.into(), passed, value, tolerance: 1.0, detail: detail.into() });
        passed
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    /// `report.json` plus one CSV per table in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| crate::LabError::Parse(e.to_string()))?;
        fs::write(dir.join("report.json"), json + "\n")?;
        for t in &self.tables {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}
