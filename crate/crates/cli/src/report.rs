//! Report and table assembly.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::ScenarioConfig;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    /// Human-readable form of the threshold, e.g. `">= 1.8"`.
    pub threshold: String,
}

impl Criterion {
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value >= bound,
            value,
            threshold: format!(">= {bound}"),
        }
    }

    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= bound,
            value,
            threshold: format!("<= {bound}"),
        }
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value < bound,
            value,
            threshold: format!("< {bound}"),
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            threshold: "true".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Shortest round-trip representation, so reruns produce identical bytes.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: String,
    pub inputs: ScenarioConfig,
    pub metrics: Map<String, Value>,
    pub criteria: Vec<Criterion>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            schema: SCHEMA,
            scenario: cfg.scenario.name().into(),
            inputs: cfg.clone(),
            metrics: Map::new(),
            criteria: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metrics serialize");
        self.metrics.insert(key.into(), v);
    }

    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    /// Write `report.json` and one CSV per table; returns the written paths.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        out.push(path);
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.to_csv().map_err(io::Error::other)?)?;
            out.push(path);
        }
        Ok(out)
    }
}
