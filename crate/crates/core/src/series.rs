// SPDX-License-Identifier: MIT OR Apache-2.0

//! Raw observation matrices and their globally standardized form.

use crate::error::{CorrError, Result};

/// Variance floor below which a variable is treated as constant.
pub const MIN_VARIANCE: f64 = 1e-300;

/// A `p x T` data matrix. Rows are variables, columns are time points.
///
/// Stored variable-major: entry `(i, t)` lives at `i * T + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix {
    values: Vec<f64>,
    p: usize,
    len: usize,
}

impl ObservationMatrix {
    /// Builds a matrix from variable-major values. Every entry must be finite.
    pub fn new(p: usize, len: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 || len == 0 {
            return Err(CorrError::InvalidShape(format!(
                "p and T must be positive, got p={p}, T={len}"
            )));
        }
        if values.len() != p * len {
            return Err(CorrError::InvalidShape(format!(
                "expected {} values for a {p}x{len} matrix, got {}",
                p * len,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(CorrError::NonFinite {
                row: idx / len,
                col: idx % len,
            });
        }
        Ok(Self { values, p, len })
    }

    /// Builds a matrix from one vector per variable.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(CorrError::InvalidShape("rows differ in length".into()));
        }
        Self::new(p, len, rows.concat())
    }

    /// Builds a matrix from one vector per time point (observation `y_t`).
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let len = columns.len();
        let p = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != p) {
            return Err(CorrError::InvalidShape("columns differ in length".into()));
        }
        let mut values = vec![0.0; p * len];
        for (t, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                values[i * len + t] = v;
            }
        }
        Self::new(p, len, values)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[i * self.len + t]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.len..(i + 1) * self.len]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copies column `t` (the observation `y_t`).
    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, t)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.len).map(|t| self.column(t)).collect()
    }

    /// Appends columns on the right, returning the widened matrix.
    pub fn append_columns(&self, extra: &[Vec<f64>]) -> Result<Self> {
        if extra.iter().any(|c| c.len() != self.p) {
            return Err(CorrError::InvalidShape(
                "appended column has the wrong dimension".into(),
            ));
        }
        let new_len = self.len + extra.len();
        let mut values = Vec::with_capacity(self.p * new_len);
        for i in 0..self.p {
            values.extend_from_slice(self.row(i));
            values.extend(extra.iter().map(|c| c[i]));
        }
        Self::new(self.p, new_len, values)
    }

    /// Applies `f(i, t, value)` to every entry.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let len = self.len;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx / len, idx % len, v))
            .collect();
        Self {
            values,
            p: self.p,
            len,
        }
    }
}

/// Observations centred by the full-sample mean and scaled by the full-sample
/// standard deviation (divisor `T - 1`), one scale per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizedSeries {
    values: Vec<f64>,
    column_mean: Vec<f64>,
    scale: Vec<f64>,
    p: usize,
    len: usize,
}

impl StandardizedSeries {
    /// Wraps data that is already on the standardized scale (known mean zero,
    /// unit variance) without re-estimating anything.
    pub fn assume_standardized(data: &ObservationMatrix) -> Self {
        Self {
            values: data.values.clone(),
            column_mean: vec![0.0; data.p],
            scale: vec![1.0; data.p],
            p: data.p,
            len: data.len,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[i * self.len + t]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.len..(i + 1) * self.len]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_mean(&self) -> &[f64] {
        &self.column_mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Time-major copy: entry `(t, i)` at `t * p + i`.
    pub(crate) fn time_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for i in 0..self.p {
            for (t, &v) in self.row(i).iter().enumerate() {
                out[t * self.p + i] = v;
            }
        }
        out
    }
}

/// Global standardization `x_t = D^{-1/2} (y_t - ȳ)`.
pub fn standardize(data: &ObservationMatrix) -> Result<StandardizedSeries> {
    let (p, len) = (data.p, data.len);
    if len < 2 {
        return Err(CorrError::SeriesTooShort { needed: 2, got: len });
    }
    let mut values = Vec::with_capacity(p * len);
    let mut column_mean = Vec::with_capacity(p);
    let mut scale = Vec::with_capacity(p);
    for i in 0..p {
        let row = data.row(i);
        let mean = row.iter().sum::<f64>() / len as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (len - 1) as f64;
        if !(var > MIN_VARIANCE) {
            return Err(CorrError::ZeroVarianceRow(i));
        }
        let sd = var.sqrt();
        values.extend(row.iter().map(|v| (v - mean) / sd));
        column_mean.push(mean);
        scale.push(sd);
    }
    Ok(StandardizedSeries {
        values,
        column_mean,
        scale,
        p,
        len,
    })
}
