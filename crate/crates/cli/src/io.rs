//! CSV ingestion and export of panels and edge lists.
//!
//! Panel: one row per `(unit, period)` with bound outcome, treatment and
//! covariate columns; other columns are ignored. Edges: header
//! `source,target,period,weight` (any order), one directed edge per row.

use std::fs::File;
use std::path::Path;

use jps_core::{EdgeRecord, NodeKey, PanelDataset};

use crate::config::ColumnSection;
use crate::error::{CliError, CliResult};
use crate::format::exact;

fn open(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| CliError::MissingFile {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn create(path: &Path) -> CliResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn row_err(path: &Path, e: csv::Error) -> CliError {
    let row = e.position().map_or(0, |p| p.line());
    CliError::MalformedRow {
        path: path.to_path_buf(),
        row,
        message: match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            _ => e.to_string(),
        },
    }
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> CliResult<Vec<String>> {
    let h = reader.headers().map_err(|e| row_err(path, e))?;
    Ok(h.iter().map(str::to_string).collect())
}

fn column(path: &Path, headers: &[String], field: &str, name: &str) -> CliResult<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::UnboundColumn {
            field: field.into(),
            column: name.into(),
            path: path.to_path_buf(),
        })
}

fn number(path: &Path, row: u64, name: &str, text: &str) -> CliResult<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::MalformedRow {
            path: path.to_path_buf(),
            row,
            message: format!("column `{name}`: `{text}` is not a finite number"),
        }),
    }
}

/// Reads the bound columns plus `covariates` into a dataset.
pub fn read_panel(path: &Path, columns: &ColumnSection, covariates: &[String]) -> CliResult<PanelDataset> {
    let mut reader = open(path)?;
    let headers = headers(path, &mut reader)?;
    let unit = column(path, &headers, "columns.unit", &columns.unit)?;
    let period = column(path, &headers, "columns.period", &columns.period)?;
    let outcome = column(path, &headers, "columns.outcome", &columns.outcome)?;
    let treatment = column(path, &headers, "columns.treatment", &columns.treatment)?;
    let cov_idx: Vec<usize> = covariates
        .iter()
        .map(|c| column(path, &headers, "columns.covariates", c))
        .collect::<CliResult<_>>()?;

    let mut keys = Vec::new();
    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut x: Vec<Vec<f64>> = vec![Vec::new(); covariates.len()];
    for record in reader.records() {
        let record = record.map_err(|e| row_err(path, e))?;
        let row = record.position().map_or(0, |p| p.line());
        keys.push(NodeKey::new(&record[unit], &record[period]));
        y.push(number(path, row, &columns.outcome, &record[outcome])?);
        let zi = number(path, row, &columns.treatment, &record[treatment])?;
        if zi <= 0.0 {
            return Err(CliError::MalformedRow {
                path: path.to_path_buf(),
                row,
                message: format!("column `{}`: treatment must be positive, found {zi}", columns.treatment),
            });
        }
        z.push(zi);
        for ((col, &j), name) in x.iter_mut().zip(&cov_idx).zip(covariates) {
            col.push(number(path, row, name, &record[j])?);
        }
    }
    let mut ds = PanelDataset::new(keys, y, z)?;
    for (name, col) in covariates.iter().zip(x) {
        ds.set_covariate(name.clone(), col)?;
    }
    Ok(ds)
}

pub fn read_edges(path: &Path) -> CliResult<Vec<EdgeRecord>> {
    let mut reader = open(path)?;
    let headers = headers(path, &mut reader)?;
    let idx = |name: &str| column(path, &headers, "edges header", name);
    let (s, t, p, w) = (idx("source")?, idx("target")?, idx("period")?, idx("weight")?);
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| row_err(path, e))?;
        let row = record.position().map_or(0, |p| p.line());
        let weight = number(path, row, "weight", &record[w])?;
        if weight < 0.0 {
            return Err(CliError::MalformedRow {
                path: path.to_path_buf(),
                row,
                message: format!("column `weight`: negative weight {weight}"),
            });
        }
        edges.push(EdgeRecord::new(&record[s], &record[t], &record[p], weight));
    }
    Ok(edges)
}

/// Writes bound columns and every covariate with round-trip precision.
pub fn write_panel(path: &Path, ds: &PanelDataset, columns: &ColumnSection) -> CliResult<()> {
    let mut w = create(path)?;
    let mut header = vec![
        columns.unit.clone(),
        columns.period.clone(),
        columns.outcome.clone(),
        columns.treatment.clone(),
    ];
    header.extend(ds.covariate_names().iter().cloned());
    w.write_record(&header).map_err(write_err(path))?;
    let covs: Vec<&[f64]> = ds
        .covariate_names()
        .iter()
        .map(|c| ds.covariate(c))
        .collect::<Result<_, _>>()?;
    for (i, key) in ds.keys().iter().enumerate() {
        let mut rec = vec![
            key.unit.clone(),
            key.period.clone(),
            exact(ds.outcome()[i]),
            exact(ds.treatment()[i]),
        ];
        rec.extend(covs.iter().map(|c| exact(c[i])));
        w.write_record(&rec).map_err(write_err(path))?;
    }
    w.flush().map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_edges(path: &Path, edges: &[EdgeRecord]) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_record(["source", "target", "period", "weight"])
        .map_err(write_err(path))?;
    for e in edges {
        w.write_record([&e.source, &e.target, &e.period, &exact(e.weight)])
            .map_err(write_err(path))?;
    }
    w.flush().map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes a result table. Values are already formatted.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_record(header).map_err(write_err(path))?;
    for r in rows {
        w.write_record(r).map_err(write_err(path))?;
    }
    w.flush().map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
