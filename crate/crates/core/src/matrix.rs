use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense N×d matrix of finite reals, stored row-major. Columns are variables,
/// rows are observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct SampleMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl TryFrom<RawMatrix> for SampleMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        SampleMatrix::from_row_major(raw.n_rows, raw.n_cols, raw.values)
    }
}

impl From<SampleMatrix> for RawMatrix {
    fn from(m: SampleMatrix) -> Self {
        RawMatrix {
            n_rows: m.n_rows,
            n_cols: m.n_cols,
            values: m.values,
        }
    }
}

impl SampleMatrix {
    /// Builds a matrix from row-major values. Rejects non-finite entries and
    /// shape mismatches. Any positive row count is accepted here; estimators
    /// check their own minimum sizes.
    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::invalid("matrix needs at least one column"));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {n_rows}x{n_cols} matrix, got {}",
                n_rows * n_cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::invalid(format!(
                "row {bad} has {} columns, expected {n_cols}",
                rows[bad].len()
            )));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), n_cols, values)
    }

    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let n_cols = columns.len();
        let n_rows = columns.first().map_or(0, |c| c.len());
        if let Some(bad) = columns.iter().position(|c| c.len() != n_rows) {
            return Err(Error::invalid(format!(
                "column {bad} has {} rows, expected {n_rows}",
                columns[bad].len()
            )));
        }
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            values.extend(columns.iter().map(|c| c[i]));
        }
        Self::from_row_major(n_rows, n_cols, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(col)
            .step_by(self.n_cols)
            .copied()
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_cols) {
            return Err(Error::invalid(format!(
                "column index {bad} out of range for {} columns",
                self.n_cols
            )));
        }
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for r in self.rows() {
            values.extend(cols.iter().map(|&c| r[c]));
        }
        Self::from_row_major(self.n_rows, cols.len(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let err = SampleMatrix::from_row_major(2, 1, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn columns_and_rows_agree() {
        let m = SampleMatrix::from_columns(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.row(1), &[2.0, 5.0]);
        assert_eq!(m.column(1), vec![4.0, 5.0, 6.0]);
        let s = m.select_columns(&[1, 0]).unwrap();
        assert_eq!(s.row(2), &[6.0, 3.0]);
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"n_rows":1,"n_cols":2,"values":[1.0]}"#;
        assert!(serde_json::from_str::<SampleMatrix>(bad).is_err());
    }
}
