use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, DataTable, Labels};
use crate::{Error, Result};

/// Column declarations for a CSV file, read from TOML:
///
/// ```toml
/// label = "class"
/// default_kind = "continuous"
///
/// [columns]
/// smoker = "binary"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub label: Option<String>,
    pub default_kind: ColumnKind,
    pub columns: BTreeMap<String, ColumnKind>,
}

impl Schema {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn kind_of(&self, column: &str) -> ColumnKind {
        self.columns.get(column).copied().unwrap_or(self.default_kind)
    }
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<DataTable> {
    read_csv(File::open(path.as_ref())?, schema)
}

/// Parses CSV with a header row. Empty and `NA` cells become missing.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();

    let label_idx = match &schema.label {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("label column `{name}` not found in header")))?,
        ),
        None => None,
    };
    for name in schema.columns.keys() {
        if !headers.contains(name) {
            return Err(Error::Schema(format!("declared column `{name}` not found in header")));
        }
    }
    let data_cols: Vec<usize> = (0..headers.len()).filter(|&j| Some(j) != label_idx).collect();
    let kinds: Vec<ColumnKind> = data_cols.iter().map(|&j| schema.kind_of(&headers[j])).collect();
    let names: Vec<String> = data_cols.iter().map(|&j| headers[j].clone()).collect();

    let d = data_cols.len();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Load {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        if let Some(li) = label_idx {
            let cell = record[li].trim();
            if is_missing(cell) {
                return Err(Error::Load {
                    row,
                    column: headers[li].clone(),
                    message: "missing class label".into(),
                });
            }
            raw_labels.push(cell.to_owned());
        }
        for (k, &j) in data_cols.iter().enumerate() {
            let cell = &record[j];
            if is_missing(cell) {
                values.push(0.0);
                mask.push(0.0);
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Load {
                row,
                column: headers[j].clone(),
                message: format!("cannot parse `{cell}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Load {
                    row,
                    column: headers[j].clone(),
                    message: format!("non-finite value `{cell}`"),
                });
            }
            if kinds[k] == ColumnKind::Binary && v != 0.0 && v != 1.0 {
                return Err(Error::Schema(format!(
                    "binary column `{}` has value {v} at row {row}",
                    headers[j]
                )));
            }
            values.push(v);
            mask.push(1.0);
        }
    }
    let n = mask.len().checked_div(d).unwrap_or(0);
    let values = Array2::from_shape_vec((n, d), values).map_err(|e| Error::Internal(e.to_string()))?;
    let mask = Array2::from_shape_vec((n, d), mask).map_err(|e| Error::Internal(e.to_string()))?;
    let table = DataTable::new(values, mask, kinds, names)?;
    if label_idx.is_some() {
        table.with_labels(Labels::from_strings(&raw_labels))
    } else {
        Ok(table)
    }
}

fn format_value(v: f64, kind: ColumnKind) -> String {
    match kind {
        ColumnKind::Binary => {
            if v >= 0.5 {
                "1".into()
            } else {
                "0".into()
            }
        }
        ColumnKind::Continuous => format!("{v}"),
    }
}

/// Re-emits `input` with every missing cell of a table column replaced by
/// the matching entry of `completed`. Observed cells, the header, and columns
/// not present in `table` (label, dropped columns) are copied verbatim.
pub fn write_completed_csv<W: Write>(
    input: impl AsRef<Path>,
    out: W,
    table: &DataTable,
    completed: &Array2<f64>,
    header_comment: Option<&str>,
) -> Result<usize> {
    if completed.dim() != table.values().dim() {
        return Err(Error::Input("completed matrix does not match table".into()));
    }
    let mut out = out;
    if let Some(comment) = header_comment {
        writeln!(out, "# {comment}")?;
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(File::open(input.as_ref())?);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let column_of: Vec<Option<usize>> = headers
        .iter()
        .map(|h| table.column_names().iter().position(|c| c == h))
        .collect();

    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(rdr.headers()?)?;
    let mut replaced = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row: Vec<String> = record
            .iter()
            .zip(&column_of)
            .map(|(cell, col)| match col {
                Some(j) if table.mask()[[i, *j]] == 0.0 => {
                    replaced += 1;
                    format_value(completed[[i, *j]], table.column_kinds()[*j])
                }
                _ => cell.to_owned(),
            })
            .collect();
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(replaced)
}
