//! Row-oriented numeric storage shared by the embedding and learning layers.

use serde::{Deserialize, Serialize};

/// Read-only row access. Classifiers only ever see this interface, so sparse
/// text blocks are never densified as a whole.
pub trait Rows: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn value(&self, row: usize, col: usize) -> f64;

    fn dense_row(&self, row: usize) -> Vec<f64> {
        (0..self.n_cols()).map(|c| self.value(row, c)).collect()
    }
}

/// Sparse vector with strictly increasing column indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn get(&self, col: usize) -> f64 {
        match self.indices.binary_search(&(col as u32)) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n_cols: usize) -> Self {
        DenseMatrix {
            n_cols,
            data: Vec::new(),
        }
    }

    /// Panics if rows have differing lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = DenseMatrix::new(n_cols);
        for r in rows {
            m.push_row(r.as_ref());
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols, "row length must match column count");
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }
}

impl Rows for DenseMatrix {
    fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_cols).unwrap_or(0)
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    fn dense_row(&self, row: usize) -> Vec<f64> {
        self.row(row).to_vec()
    }
}

/// `top` rows followed by `bottom` rows. Column counts must agree.
pub struct Stacked<'a, A: Rows, B: Rows> {
    top: &'a A,
    bottom: &'a B,
}

impl<'a, A: Rows, B: Rows> Stacked<'a, A, B> {
    pub fn new(top: &'a A, bottom: &'a B) -> Self {
        assert!(
            bottom.n_rows() == 0 || top.n_cols() == bottom.n_cols(),
            "stacked matrices must share columns"
        );
        Stacked { top, bottom }
    }
}

impl<A: Rows, B: Rows> Rows for Stacked<'_, A, B> {
    fn n_rows(&self) -> usize {
        self.top.n_rows() + self.bottom.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.top.n_cols()
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        let split = self.top.n_rows();
        if row < split {
            self.top.value(row, col)
        } else {
            self.bottom.value(row - split, col)
        }
    }
}

/// A subset of another matrix's rows, in the given order.
pub struct RowSubset<'a, M: Rows> {
    base: &'a M,
    rows: &'a [usize],
}

impl<'a, M: Rows> RowSubset<'a, M> {
    pub fn new(base: &'a M, rows: &'a [usize]) -> Self {
        RowSubset { base, rows }
    }
}

impl<M: Rows> Rows for RowSubset<'_, M> {
    fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn n_cols(&self) -> usize {
        self.base.n_cols()
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        self.base.value(self.rows[row], col)
    }
}
