use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, DataTable};
use crate::{Error, Result};

/// Per-column min-max parameters fitted on observed entries.
///
/// Binary columns pass through untouched. A constant continuous column maps
/// to 0 and inverts back to its constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    min: Vec<f64>,
    max: Vec<f64>,
    kinds: Vec<ColumnKind>,
}

impl Normalizer {
    pub fn fit(table: &DataTable) -> Result<Self> {
        let d = table.n_cols();
        let mut min = vec![0.0; d];
        let mut max = vec![1.0; d];
        for j in 0..d {
            if table.column_kinds()[j] == ColumnKind::Binary {
                continue;
            }
            let observed = table
                .values()
                .column(j)
                .iter()
                .zip(table.mask().column(j))
                .filter(|(_, &m)| m == 1.0)
                .map(|(&v, _)| v)
                .fold(None, |acc: Option<(f64, f64)>, v| match acc {
                    None => Some((v, v)),
                    Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
                });
            let (lo, hi) = observed.ok_or_else(|| {
                Error::Normalization(format!("column `{}` has no observed values", table.column_names()[j]))
            })?;
            min[j] = lo;
            max[j] = hi;
        }
        Ok(Self {
            min,
            max,
            kinds: table.column_kinds().to_vec(),
        })
    }

    pub fn n_cols(&self) -> usize {
        self.kinds.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    #[inline]
    fn forward(&self, j: usize, v: f64) -> f64 {
        if self.kinds[j] == ColumnKind::Binary {
            return v;
        }
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (v - self.min[j]) / range
        } else {
            0.0
        }
    }

    #[inline]
    fn backward(&self, j: usize, v: f64) -> f64 {
        if self.kinds[j] == ColumnKind::Binary {
            return v;
        }
        v * (self.max[j] - self.min[j]) + self.min[j]
    }

    fn check_width(&self, m: &Array2<f64>) -> Result<()> {
        if m.ncols() != self.n_cols() {
            return Err(Error::Input(format!(
                "normalizer fitted on {} columns, got {}",
                self.n_cols(),
                m.ncols()
            )));
        }
        Ok(())
    }

    /// Applies the mapping to every entry of a matrix.
    pub fn transform_matrix(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(m)?;
        let mut out = m.clone();
        for ((_, j), v) in out.indexed_iter_mut() {
            *v = self.forward(j, *v);
        }
        Ok(out)
    }

    pub fn inverse_matrix(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_width(m)?;
        let mut out = m.clone();
        for ((_, j), v) in out.indexed_iter_mut() {
            *v = self.backward(j, *v);
        }
        Ok(out)
    }

    /// Normalizes observed entries; masked placeholders stay 0.
    pub fn transform(&self, table: &DataTable) -> Result<DataTable> {
        let mut values = self.transform_matrix(table.values())?;
        values.zip_mut_with(table.mask(), |v, &m| *v *= m);
        table.with_values(values)
    }

    pub fn inverse(&self, table: &DataTable) -> Result<DataTable> {
        let mut values = self.inverse_matrix(table.values())?;
        values.zip_mut_with(table.mask(), |v, &m| *v *= m);
        table.with_values(values)
    }
}

/// Fits a [`Normalizer`] on the observed entries and applies it.
pub fn normalize(table: &DataTable) -> Result<(DataTable, Normalizer)> {
    let norm = Normalizer::fit(table)?;
    Ok((norm.transform(table)?, norm))
}
