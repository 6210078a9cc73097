//! Reading series from delimited text files.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    None,
    /// `x_{i+1} - x_i`
    Diff,
    /// `log x_{i+1} - log x_i`
    DiffLog,
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Transform::None),
            "diff" => Ok(Transform::Diff),
            "difflog" | "diff-log" => Ok(Transform::DiffLog),
            _ => Err(Error::InvalidParameter(format!("unknown transform {s:?}"))),
        }
    }
}

/// A column given by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "{n}"),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub column: ColumnRef,
    pub transform: Transform,
    pub delimiter: u8,
    pub header: bool,
    /// Optional column (dates, timestamps) carried along as row labels.
    pub label_column: Option<ColumnRef>,
}

impl IngestSpec {
    pub fn new(path: impl Into<PathBuf>, column: ColumnRef) -> Self {
        IngestSpec {
            path: path.into(),
            column,
            transform: Transform::None,
            delimiter: b',',
            header: true,
            label_column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: Series,
    /// One label per series value, aligned after the transform.
    pub row_labels: Option<Vec<String>>,
}

impl Ingested {
    pub fn label_at(&self, index: usize) -> Option<&str> {
        self.row_labels.as_ref()?.get(index).map(String::as_str)
    }
}

fn resolve(col: &ColumnRef, headers: Option<&csv::StringRecord>) -> Result<usize> {
    match (col, headers) {
        (ColumnRef::Name(name), Some(h)) => h
            .iter()
            .position(|c| c.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.clone())),
        (ColumnRef::Name(name), None) => Err(Error::MissingColumn(format!(
            "{name} (file has no header row)"
        ))),
        (ColumnRef::Index(i), Some(h)) => {
            // a header literally named like the number wins
            let s = i.to_string();
            Ok(h.iter().position(|c| c.trim() == s).unwrap_or(*i))
        }
        (ColumnRef::Index(i), None) => Ok(*i),
    }
}

pub fn ingest(spec: &IngestSpec) -> Result<Ingested> {
    let file = std::fs::File::open(&spec.path).map_err(|e| Error::io(&spec.path, e))?;
    ingest_reader(file, spec).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(&spec.path, source),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(reader: R, spec: &IngestSpec) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = if spec.header {
        Some(rdr.headers().map_err(|e| csv_error(e, 1))?.clone())
    } else {
        None
    };
    let col = resolve(&spec.column, headers.as_ref())?;
    let label_col = spec
        .label_column
        .as_ref()
        .map(|c| resolve(c, headers.as_ref()))
        .transpose()?;

    let mut raw = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1 + usize::from(spec.header);
        let rec = rec.map_err(|e| csv_error(e, line))?;
        let line = rec.position().map_or(line, |p| p.line() as usize);
        let field = rec
            .get(col)
            .ok_or_else(|| Error::MissingColumn(format!("{} (absent on line {line})", spec.column)))?;
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("not a number: {field:?}"),
        })?;
        raw.push(v);
        if let Some(lc) = label_col {
            let label = rec.get(lc).ok_or_else(|| {
                Error::MissingColumn(format!("label column absent on line {line}"))
            })?;
            labels.push(label.to_string());
        }
    }

    let (values, labels) = match spec.transform {
        Transform::None => (raw, labels),
        Transform::Diff => (
            raw.windows(2).map(|w| w[1] - w[0]).collect(),
            labels.into_iter().skip(1).collect(),
        ),
        Transform::DiffLog => {
            if let Some(row) = raw.iter().position(|&v| v <= 0.0) {
                return Err(Error::NonPositive {
                    row: row + 1,
                    value: raw[row],
                });
            }
            (
                raw.windows(2).map(|w| w[1].ln() - w[0].ln()).collect(),
                labels.into_iter().skip(1).collect(),
            )
        }
    };
    let name = spec.path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(Ingested {
        series: Series::new(values, name)?,
        row_labels: label_col.map(|_| labels),
    })
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes a series as a one-column CSV (`value`), with labels when given.
pub fn export<W: Write>(series: &Series, labels: Option<&[String]>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::io("<series csv>", std::io::Error::other(e));
    match labels {
        Some(l) => {
            w.write_record(["label", "value"]).map_err(err)?;
            for (lab, v) in l.iter().zip(series.values()) {
                w.write_record([lab.clone(), v.to_string()]).map_err(err)?;
            }
        }
        None => {
            w.write_record(["value"]).map_err(err)?;
            for v in series.values() {
                w.write_record([v.to_string()]).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<series csv>", e))
}

pub fn export_to_path(series: &Series, labels: Option<&[String]>, path: &Path) -> Result<()> {
    crate::nulldist::write_atomic(path, |w| {
        export(series, labels, w).map_err(|e| std::io::Error::other(e.to_string()))
    })
}
