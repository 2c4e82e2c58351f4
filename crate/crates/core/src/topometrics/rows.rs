//! Tabular metric output: one row per network.
//!
//! Columns: `architecture,dataset,sparsity,algorithm,run,nodes,edges,padding_nodes`,
//! the sixteen normalized metrics, then the sixteen raw metrics prefixed
//! `raw_`. A `*` dataset matches any dataset. Missing values are empty cells.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Metrics16, MetricsError, TopometricVector, METRIC_COUNT, METRIC_NAMES};

const KEY_COLUMNS: [&str; 8] = [
    "architecture",
    "dataset",
    "sparsity",
    "algorithm",
    "run",
    "nodes",
    "edges",
    "padding_nodes",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub architecture: String,
    pub dataset: String,
    pub sparsity: f64,
    pub algorithm: String,
    pub run: usize,
    pub nodes: usize,
    pub edges: usize,
    pub padding_nodes: usize,
    pub normalized: Metrics16,
    pub raw: Metrics16,
}

impl MetricsRow {
    pub fn new(
        architecture: impl Into<String>,
        dataset: impl Into<String>,
        sparsity: f64,
        algorithm: impl Into<String>,
        run: usize,
        v: &TopometricVector,
    ) -> Self {
        Self {
            architecture: architecture.into(),
            dataset: dataset.into(),
            sparsity,
            algorithm: algorithm.into(),
            run,
            nodes: v.nodes,
            edges: v.edges,
            padding_nodes: v.padding_nodes,
            normalized: v.normalized,
            raw: v.raw,
        }
    }

    pub fn header() -> Vec<String> {
        KEY_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(METRIC_NAMES.iter().map(|s| s.to_string()))
            .chain(METRIC_NAMES.iter().map(|s| format!("raw_{s}")))
            .collect()
    }

    pub fn fields(&self) -> Vec<String> {
        let cell = |v: f64| if v.is_nan() { String::new() } else { format!("{v:?}") };
        let mut out = vec![
            self.architecture.clone(),
            self.dataset.clone(),
            format!("{:?}", self.sparsity),
            self.algorithm.clone(),
            self.run.to_string(),
            self.nodes.to_string(),
            self.edges.to_string(),
            self.padding_nodes.to_string(),
        ];
        out.extend(self.normalized.0.iter().map(|&v| cell(v)));
        out.extend(self.raw.0.iter().map(|&v| cell(v)));
        out
    }

    pub fn matches_dataset(&self, dataset: &str) -> bool {
        self.dataset == "*" || self.dataset == dataset
    }
}

/// Writes rows with a header. Extra `(name, value)` columns are appended to every row.
pub fn write_rows_csv(rows: &[MetricsRow], extra: &[(&str, &str)], w: impl Write) -> Result<(), MetricsError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = MetricsRow::header();
    header.extend(extra.iter().map(|(k, _)| k.to_string()));
    wr.write_record(&header)?;
    for r in rows {
        let mut f = r.fields();
        f.extend(extra.iter().map(|(_, v)| v.to_string()));
        wr.write_record(&f)?;
    }
    wr.flush()?;
    Ok(())
}

fn parse_cell<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, col: &str) -> Result<T, MetricsError> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| MetricsError::Format(format!("bad `{col}` value in row {:?}", rec.position().map(|p| p.line()))))
}

/// Reads rows written by [`write_rows_csv`]; unknown extra columns are ignored.
pub fn read_rows_csv(r: impl Read) -> Result<Vec<MetricsRow>, MetricsError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MetricsError::Format(format!("missing column `{name}`")))
    };
    let key: Vec<usize> = KEY_COLUMNS.iter().map(|k| col(k)).collect::<Result<_, _>>()?;
    let norm: Vec<usize> = METRIC_NAMES.iter().map(|k| col(k)).collect::<Result<_, _>>()?;
    let raw: Vec<Option<usize>> = METRIC_NAMES
        .iter()
        .map(|k| header.iter().position(|h| h == format!("raw_{k}")))
        .collect();
    let metric = |rec: &csv::StringRecord, i: Option<usize>| -> Result<f64, MetricsError> {
        match i.and_then(|i| rec.get(i)).map(str::trim) {
            None | Some("") => Ok(f64::NAN),
            Some(s) => s
                .parse()
                .map_err(|_| MetricsError::Format(format!("bad metric value `{s}`"))),
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let mut normalized = [f64::NAN; METRIC_COUNT];
        let mut raw_vals = [f64::NAN; METRIC_COUNT];
        for m in 0..METRIC_COUNT {
            normalized[m] = metric(&rec, Some(norm[m]))?;
            raw_vals[m] = metric(&rec, raw[m])?;
        }
        rows.push(MetricsRow {
            architecture: rec.get(key[0]).unwrap_or_default().to_string(),
            dataset: rec.get(key[1]).unwrap_or_default().to_string(),
            sparsity: parse_cell(&rec, key[2], "sparsity")?,
            algorithm: rec.get(key[3]).unwrap_or_default().to_string(),
            run: parse_cell(&rec, key[4], "run")?,
            nodes: parse_cell(&rec, key[5], "nodes")?,
            edges: parse_cell(&rec, key[6], "edges")?,
            padding_nodes: parse_cell(&rec, key[7], "padding_nodes")?,
            normalized: Metrics16(normalized),
            raw: Metrics16(raw_vals),
        });
    }
    Ok(rows)
}
