use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::{Map, Value};

use super::{fmt4, round4};
use crate::error::{Error, Result};
use crate::report::{PairRow, ReplicationPairReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown format `{other}` (expected csv, json or markdown)")),
        }
    }
}

/// A flattened table: one row per label, one column per statistic.
struct Wide {
    columns: Vec<String>,
    rows: Vec<(String, Vec<Option<f64>>)>,
}

fn flatten<'a>(reports: &'a [ReplicationPairReport]) -> Result<Wide> {
    let mut labels: Vec<&str> = Vec::new();
    let mut reps: Vec<&str> = Vec::new();
    for r in reports {
        for name in [r.x.as_str(), r.y.as_str()] {
            if !reps.contains(&name) {
                reps.push(name);
            }
        }
        for row in &r.rows {
            if !labels.contains(&row.label.as_str()) {
                labels.push(&row.label);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyReport);
    }
    let with_rho = reports.iter().flat_map(|r| &r.rows).any(|row| row.rho.is_some());

    let mut columns = vec!["label".to_owned()];
    columns.extend(reps.iter().map(|r| format!("irr_{r}")));
    columns.extend(reports.iter().map(|r| format!("kx_{}_{}", r.x, r.y)));
    columns.extend(reports.iter().map(|r| format!("norm_kx_{}_{}", r.x, r.y)));
    if with_rho {
        columns.extend(reports.iter().map(|r| format!("rho_{}_{}", r.x, r.y)));
    }

    let rows = labels
        .iter()
        .map(|&label| {
            let lookup = |r: &'a ReplicationPairReport| -> Option<&'a PairRow> { r.rows.iter().find(|row| row.label == label) };
            let mut irr: BTreeMap<&str, f64> = BTreeMap::new();
            for r in reports {
                if let Some(row) = lookup(r) {
                    if let Some(v) = row.irr_x {
                        irr.entry(r.x.as_str()).or_insert(v);
                    }
                    if let Some(v) = row.irr_y {
                        irr.entry(r.y.as_str()).or_insert(v);
                    }
                }
            }
            let mut values: Vec<Option<f64>> = reps.iter().map(|r| irr.get(r).copied()).collect();
            values.extend(reports.iter().map(|r| lookup(r).and_then(|row| row.kappa_x)));
            values.extend(reports.iter().map(|r| lookup(r).and_then(|row| row.normalized_kappa_x)));
            if with_rho {
                values.extend(reports.iter().map(|r| lookup(r).and_then(|row| row.rho)));
            }
            (label.to_owned(), values)
        })
        .collect();
    Ok(Wide { columns, rows })
}

/// One table cell. Numbers render with four decimals; `None` is a value
/// that could not be computed.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Num(Option<f64>),
    Count(usize),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(Some(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Count(v)
    }
}

/// Renders a table. Missing numbers are left empty (CSV), `null` (JSON) or
/// `n/a` (Markdown). JSON is `{"columns": [...], "rows": [{...}]}` with
/// object keys sorted.
pub fn write_table(columns: &[String], rows: &[Vec<Cell>], format: ReportFormat) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        ReportFormat::Csv => {
            let mut out = csv::Writer::from_writer(Vec::new());
            out.write_record(columns)?;
            for row in rows {
                out.write_record(row.iter().map(|c| text(c, "")))?;
            }
            out.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        ReportFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (name, cell) in columns.iter().zip(row) {
                        let v = match cell {
                            Cell::Text(s) => Value::String(s.clone()),
                            Cell::Num(v) => v.map(|x| Value::from(round4(x))).unwrap_or(Value::Null),
                            Cell::Count(n) => Value::from(*n),
                        };
                        obj.insert(name.clone(), v);
                    }
                    Value::Object(obj)
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("columns".into(), Value::from(columns.to_vec()));
            doc.insert("rows".into(), Value::Array(rows));
            let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Markdown => {
            let mut s = String::new();
            s.push_str(&format!("| {} |\n", columns.join(" | ")));
            s.push_str(&format!("|{}\n", columns.iter().map(|_| "---|").collect::<String>()));
            for row in rows {
                let cells: Vec<String> = row.iter().map(|c| text(c, "n/a").replace('|', "\\|")).collect();
                s.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            Ok(s.into_bytes())
        }
    }
}

fn text(cell: &Cell, missing: &str) -> String {
    match cell {
        Cell::Text(s) => s.clone(),
        Cell::Num(Some(v)) => fmt4(*v),
        Cell::Num(None) => missing.to_owned(),
        Cell::Count(n) => n.to_string(),
    }
}

/// Renders reports as one label-by-statistic table: label, IRR per
/// replication, kappa_x per pair, normalized kappa_x per pair and, when any
/// row has it, rho per pair.
pub fn write_report(reports: &[ReplicationPairReport], format: ReportFormat) -> Result<Vec<u8>> {
    let wide = flatten(reports)?;
    let rows: Vec<Vec<Cell>> = wide
        .rows
        .into_iter()
        .map(|(label, values)| std::iter::once(Cell::Text(label)).chain(values.into_iter().map(Cell::Num)).collect())
        .collect();
    write_table(&wide.columns, &rows, format)
}
