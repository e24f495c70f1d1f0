//! Tables, CSV files with a commented provenance header, and the JSON metadata file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// One CSV table; values are pre-formatted so output is byte-stable.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self { name: name.into(), columns, rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Shortest round-trip representation; non-finite values spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    seed: u64,
    tables: Vec<&'a str>,
    config: &'a ExperimentConfig,
    summary: &'a serde_json::Value,
}

fn header(cfg: &ExperimentConfig, table: &Table) -> String {
    let mut s = format!(
        "# tool: zakdd {}\n# experiment: {}\n# table: {}\n# seed: {}\n# config:\n",
        env!("CARGO_PKG_VERSION"),
        cfg.experiment,
        table.name,
        cfg.seed
    );
    for line in cfg.to_compact_toml().lines() {
        s.push_str("#   ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

/// CSV text of one table including the header block.
pub fn render_csv(cfg: &ExperimentConfig, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = header(cfg, table).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let csv_err = |e: csv::Error| CliError::Runtime(format!("csv encoding failed: {e}"));
        w.write_record(&table.columns).map_err(csv_err)?;
        for r in &table.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::Runtime(format!("csv encoding failed: {e}")))?;
    }
    Ok(buf)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes `<table>.csv` for every table and `<experiment>.json`; returns the paths written.
pub fn write_report(cfg: &ExperimentConfig, report: &Report) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = vec![];
    for t in &report.tables {
        let p = dir.join(format!("{}.csv", t.name));
        write(&p, &render_csv(cfg, t)?)?;
        written.push(p);
    }
    let meta = Meta {
        tool: "zakdd",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        seed: cfg.seed,
        tables: report.tables.iter().map(|t| t.name.as_str()).collect(),
        config: cfg,
        summary: &report.summary,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    let p = dir.join(format!("{}.json", cfg.experiment.name()));
    write(&p, json.as_bytes())?;
    written.push(p);
    Ok(written)
}
