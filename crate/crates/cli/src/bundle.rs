//! Output bundles: `manifest.json`, `config.txt`, `tables/*.csv` and
//! `histograms/*.json`. Nothing time- or host-dependent is written, so the
//! same command and config always give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use amm_lab::stats::Histogram;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::config::Config;

pub enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:.16e}"),
            Cell::I(x) => x.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Command words, e.g. `["sweep", "fee"]`.
    pub command: Vec<String>,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub results: BTreeMap<String, Json>,
    pub tables: Vec<String>,
    pub histograms: Vec<String>,
}

pub struct Bundle {
    pub command: Vec<String>,
    pub config: Config,
    pub results: BTreeMap<String, Json>,
    pub tables: BTreeMap<String, Table>,
    pub histograms: BTreeMap<String, Histogram>,
}

impl Bundle {
    pub fn new(command: &[&str], config: &Config) -> Self {
        Self {
            command: command.iter().map(|s| s.to_string()).collect(),
            config: config.clone(),
            results: BTreeMap::new(),
            tables: BTreeMap::new(),
            histograms: BTreeMap::new(),
        }
    }

    pub fn result<T: Serialize>(&mut self, key: &str, value: T) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable result"));
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            tool: "amm-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            seed: self.config.uint("seed"),
            config: self
                .config
                .explicit()
                .iter()
                .map(|(k, v)| (k.clone(), v.to_string()))
                .collect(),
            results: self.results.clone(),
            tables: self.tables.keys().cloned().collect(),
            histograms: self.histograms.keys().cloned().collect(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let write = |path: &Path, contents: &str| {
            fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
        };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut manifest = serde_json::to_string_pretty(&self.manifest())?;
        manifest.push('\n');
        write(&dir.join("manifest.json"), &manifest)?;
        write(&dir.join("config.txt"), &self.config.to_text())?;
        if !self.tables.is_empty() {
            let tables = dir.join("tables");
            fs::create_dir_all(&tables)?;
            for (name, table) in &self.tables {
                write(&tables.join(format!("{name}.csv")), &table.to_csv())?;
            }
        }
        if !self.histograms.is_empty() {
            let hists = dir.join("histograms");
            fs::create_dir_all(&hists)?;
            for (name, h) in &self.histograms {
                let mut text = serde_json::to_string_pretty(h)?;
                text.push('\n');
                write(&hists.join(format!("{name}.json")), &text)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![Cell::F(0.1), Cell::I(3), Cell::S("x".into())]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b,c\n1.0000000000000001e-1,3,x\n");
        let parsed: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(parsed, 0.1);
    }
}
