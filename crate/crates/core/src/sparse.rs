//! Minimal sparse vector and CSR matrix types.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices and nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from (index, value) entries in any order. Repeated
    /// indices are summed and zeros dropped.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(bad, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad + 1,
            });
        }
        entries.sort_by_key(|(i, _)| *i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = Self { dim, indices, values };
        out.prune();
        Ok(out)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let (indices, nonzero) = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Self {
            dim: values.len(),
            indices,
            values: nonzero,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    pub fn scale(&self, factor: f64) -> SparseVector {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.prune();
        out
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &SparseVector, b: f64) -> Result<SparseVector> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let entries = self
            .iter()
            .map(|(i, v)| (i, a * v))
            .chain(other.iter().map(|(i, v)| (i, b * v)))
            .collect();
        SparseVector::from_entries(self.dim, entries)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    fn prune(&mut self) {
        let mut keep = 0;
        for j in 0..self.indices.len() {
            if self.values[j] != 0.0 {
                self.indices[keep] = self.indices[j];
                self.values[keep] = self.values[j];
                keep += 1;
            }
        }
        self.indices.truncate(keep);
        self.values.truncate(keep);
    }
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(n_cols: usize, rows: &[SparseVector]) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            if row.dim() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.dim(),
                });
            }
            col_idx.extend_from_slice(row.indices());
            values.extend_from_slice(row.values());
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(n_rows: usize, n_cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), n_rows * n_cols);
        let rows: Vec<SparseVector> = (0..n_rows)
            .map(|r| SparseVector::from_dense(&data[r * n_cols..(r + 1) * n_cols]))
            .collect();
        Self::from_rows(n_cols, &rows).expect("row dims match n_cols")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_vector(&self, r: usize) -> SparseVector {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        SparseVector {
            dim: self.n_cols,
            indices: self.col_idx[span.clone()].to_vec(),
            values: self.values[span].to_vec(),
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Number of stored entries in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for &c in &self.col_idx {
            counts[c] += 1;
        }
        counts
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `self * dense`, where `dense` is column-major `n_cols x width`.
    /// Output is column-major `n_rows x width`. Rows are computed
    /// independently, so the result does not depend on the thread count.
    pub fn mul_dense(&self, dense: &[f64], width: usize) -> Vec<f64> {
        assert_eq!(dense.len(), self.n_cols * width);
        let rows: Vec<Vec<f64>> = (0..self.n_rows)
            .into_par_iter()
            .map(|r| {
                let mut acc = vec![0.0; width];
                for (c, v) in self.row(r) {
                    for (j, slot) in acc.iter_mut().enumerate() {
                        *slot += v * dense[j * self.n_cols + c];
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; self.n_rows * width];
        for (r, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                out[j * self.n_rows + r] = v;
            }
        }
        out
    }

    pub fn to_dense_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                out[r * self.n_cols + c] = v;
            }
        }
        out
    }
}
