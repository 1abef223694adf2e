//! Observation matrices: rows are time points, columns are assets.

use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};

/// An n x p matrix of returns (or simulated observations) with asset and
/// period labels. Construction rejects missing or non-finite cells; filtering
/// happens upstream in the loaders.
#[derive(Debug, Clone)]
pub struct ReturnsMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    asset_ids: Vec<String>,
    period_ids: Vec<String>,
}

impl ReturnsMatrix {
    pub fn new(values: Vec<f64>, asset_ids: Vec<String>, period_ids: Vec<String>) -> Result<Self> {
        let n_rows = period_ids.len();
        let n_cols = asset_ids.len();
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid("returns matrix must have n >= 1, p >= 1"));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_cols,
                col: pos % n_cols,
            });
        }
        let unique: HashSet<&String> = asset_ids.iter().collect();
        if unique.len() != asset_ids.len() {
            return Err(Error::invalid("asset labels must be unique"));
        }
        let unique: HashSet<&String> = period_ids.iter().collect();
        if unique.len() != period_ids.len() {
            return Err(Error::invalid("period labels must be unique"));
        }
        Ok(ReturnsMatrix {
            n_rows,
            n_cols,
            values,
            asset_ids,
            period_ids,
        })
    }

    /// Wrap raw values with generated `A...`/`t...` labels.
    pub fn with_default_labels(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        let asset_ids = (1..=n_cols).map(|j| format!("A{j}")).collect();
        let period_ids = (1..=n_rows).map(|t| format!("t{t}")).collect();
        Self::new(values, asset_ids, period_ids)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn value(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.n_cols + j]
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_cols..(t + 1) * self.n_cols]
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn period_ids(&self) -> &[String] {
        &self.period_ids
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.n_cols];
        for t in 0..self.n_rows {
            for (j, m) in means.iter_mut().enumerate() {
                *m += self.value(t, j);
            }
        }
        for m in &mut means {
            *m /= self.n_rows as f64;
        }
        means
    }

    /// Submatrix with the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<ReturnsMatrix> {
        if rows.is_empty() {
            return Err(Error::invalid("row selection must be nonempty"));
        }
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        let mut period_ids = Vec::with_capacity(rows.len());
        for &t in rows {
            if t >= self.n_rows {
                return Err(Error::invalid(format!(
                    "row index {t} out of range for {} rows",
                    self.n_rows
                )));
            }
            values.extend_from_slice(self.row(t));
            period_ids.push(self.period_ids[t].clone());
        }
        ReturnsMatrix::new(values, self.asset_ids.clone(), period_ids)
    }

    /// Contiguous row window.
    pub fn window(&self, range: Range<usize>) -> Result<ReturnsMatrix> {
        let rows: Vec<usize> = range.collect();
        self.select_rows(&rows)
    }
}
