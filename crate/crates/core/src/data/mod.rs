//! Tabular data with a per-cell observation mask.

mod csv_io;
mod normalize;
mod sampling;

pub use csv_io::{load_csv, read_csv, write_completed_csv, Schema};
pub use normalize::{normalize, Normalizer};
pub use sampling::{generate_mcar_mask, make_observed, sample_batch, sample_hint, sample_noise};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    #[default]
    Continuous,
    Binary,
}

/// Class labels as dense ids plus the original label strings (`classes[id]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub ids: Vec<usize>,
    pub classes: Vec<String>,
}

impl Labels {
    /// Builds labels from raw strings; ids follow sorted class-name order.
    pub fn from_strings<S: AsRef<str>>(raw: &[S]) -> Self {
        let mut classes: Vec<String> = raw.iter().map(|s| s.as_ref().to_owned()).collect();
        classes.sort();
        classes.dedup();
        let ids = raw
            .iter()
            .map(|s| classes.binary_search_by(|c| c.as_str().cmp(s.as_ref())).unwrap())
            .collect();
        Self { ids, classes }
    }

    pub fn from_ids(ids: Vec<usize>) -> Self {
        let k = ids.iter().copied().max().map_or(0, |m| m + 1);
        Self {
            ids,
            classes: (0..k).map(|c| c.to_string()).collect(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

/// Values, observation mask (1 = observed) and column metadata.
///
/// Masked cells always hold the placeholder `0.0`, so nothing downstream can
/// read a value that is supposed to be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    values: Array2<f64>,
    mask: Array2<f64>,
    column_kinds: Vec<ColumnKind>,
    column_names: Vec<String>,
    labels: Option<Labels>,
}

impl DataTable {
    pub fn new(
        values: Array2<f64>,
        mask: Array2<f64>,
        column_kinds: Vec<ColumnKind>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = values.dim();
        if mask.dim() != (n, d) {
            return Err(Error::Input(format!(
                "mask shape {:?} does not match values {:?}",
                mask.dim(),
                (n, d)
            )));
        }
        if column_kinds.len() != d || column_names.len() != d {
            return Err(Error::Input(format!(
                "{d} columns but {} kinds and {} names",
                column_kinds.len(),
                column_names.len()
            )));
        }
        if mask.iter().any(|&m| m != 0.0 && m != 1.0) {
            return Err(Error::Input("mask entries must be 0 or 1".into()));
        }
        let mut values = values;
        for ((i, j), v) in values.indexed_iter_mut() {
            if mask[[i, j]] == 0.0 {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::Input(format!("non-finite observed value at ({i}, {j})")));
            } else if column_kinds[j] == ColumnKind::Binary && *v != 0.0 && *v != 1.0 {
                return Err(Error::Schema(format!(
                    "binary column `{}` has value {v} at row {i}",
                    column_names[j]
                )));
            }
        }
        Ok(Self {
            values,
            mask,
            column_kinds,
            column_names,
            labels: None,
        })
    }

    /// A fully observed table with generated column names `x0, x1, ...`.
    pub fn complete(values: Array2<f64>, column_kinds: Vec<ColumnKind>) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("x{j}")).collect();
        let mask = Array2::ones(values.raw_dim());
        Self::new(values, mask, column_kinds, names)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.ids.len() != self.n_rows() {
            return Err(Error::Input(format!(
                "{} labels for {} rows",
                labels.ids.len(),
                self.n_rows()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_cols() {
            return Err(Error::Input("column name count mismatch".into()));
        }
        self.column_names = names;
        Ok(self)
    }

    /// Hides additional cells: the result's mask is `self.mask AND mask`.
    pub fn with_mask(&self, mask: &Array2<f64>) -> Result<Self> {
        if mask.dim() != self.values.dim() {
            return Err(Error::Input(format!(
                "mask shape {:?} does not match table {:?}",
                mask.dim(),
                self.values.dim()
            )));
        }
        let combined = &self.mask * mask;
        let mut out = Self::new(
            self.values.clone(),
            combined,
            self.column_kinds.clone(),
            self.column_names.clone(),
        )?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Replaces the value matrix, keeping mask and metadata (used by normalization).
    pub(crate) fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        let mut out = Self::new(
            values,
            self.mask.clone(),
            self.column_kinds.clone(),
            self.column_names.clone(),
        )?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            mask: self.mask.select(Axis(0), rows),
            column_kinds: self.column_kinds.clone(),
            column_names: self.column_names.clone(),
            labels: self.labels.as_ref().map(|l| Labels {
                ids: rows.iter().map(|&r| l.ids[r]).collect(),
                classes: l.classes.clone(),
            }),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(1), cols),
            mask: self.mask.select(Axis(1), cols),
            column_kinds: cols.iter().map(|&c| self.column_kinds[c]).collect(),
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Drops every column whose missing fraction is strictly above `threshold`.
    /// Returns the reduced table and the names of the dropped columns.
    pub fn drop_missing_above(&self, threshold: f64) -> (Self, Vec<String>) {
        let n = self.n_rows().max(1) as f64;
        let (keep, drop): (Vec<usize>, Vec<usize>) = (0..self.n_cols()).partition(|&j| {
            let missing = self.mask.column(j).iter().filter(|&&m| m == 0.0).count();
            missing as f64 / n <= threshold
        });
        let dropped = drop.iter().map(|&j| self.column_names[j].clone()).collect();
        (self.select_columns(&keep), dropped)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<f64> {
        &self.mask
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 0.0).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
    }

    /// First missing cell in row-major order as `(row, column name)`.
    pub fn first_missing(&self) -> Option<(usize, &str)> {
        self.mask
            .indexed_iter()
            .find(|(_, &m)| m == 0.0)
            .map(|((i, j), _)| (i, self.column_names[j].as_str()))
    }

    /// Hex SHA-256 over column names and kinds.
    pub fn schema_digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, kind) in self.column_names.iter().zip(&self.column_kinds) {
            h.update(name.as_bytes());
            h.update([0, *kind as u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Errors with the first missing cell if the table is incomplete.
    pub fn require_complete(&self, what: &str) -> Result<()> {
        match self.first_missing() {
            None => Ok(()),
            Some((row, col)) => Err(Error::Precondition(format!(
                "{what} must be complete; first missing cell at row {}, column `{col}`",
                row + 1
            ))),
        }
    }

    /// Errors unless every observed value lies in `[0, 1]`.
    pub fn require_normalized(&self) -> Result<()> {
        let bad = self
            .values
            .indexed_iter()
            .find(|(idx, &v)| self.mask[*idx] == 1.0 && !(-1e-12..=1.0 + 1e-12).contains(&v));
        match bad {
            None => Ok(()),
            Some(((i, j), v)) => Err(Error::Input(format!(
                "table is not normalized: value {v} at row {i}, column `{}`",
                self.column_names[j]
            ))),
        }
    }
}
