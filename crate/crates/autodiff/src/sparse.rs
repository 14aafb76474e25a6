//! Compressed sparse row matrices.

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

/// CSR matrix. Column indices are sorted within each row and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= rows {
                return Err(AutodiffError::Index {
                    op: "from_triplets",
                    index: r,
                    len: rows,
                });
            }
            if c >= cols {
                return Err(AutodiffError::Index {
                    op: "from_triplets",
                    index: c,
                    len: cols,
                });
            }
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense tensor.
    pub fn from_dense(t: &Tensor) -> Self {
        let mut indptr = Vec::with_capacity(t.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..t.rows() {
            for (j, &v) in t.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows: t.rows(),
            cols: t.cols(),
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same sparsity pattern, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self {
            values,
            ..self.clone()
        }
    }

    /// Iterates `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                t.set(i, j, v);
            }
        }
        t
    }

    /// `self · x`
    pub fn matmul_dense(&self, x: &Tensor) -> Result<Tensor> {
        if self.cols != x.rows() {
            return Err(AutodiffError::Shape {
                op: "sparse_dense_matmul",
                left: self.shape(),
                right: x.shape(),
            });
        }
        let d = x.cols();
        let mut out = Tensor::zeros(self.rows, d);
        for i in 0..self.rows {
            let out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                for (o, &b) in out_row.iter_mut().zip(x.row(j)) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g`, used to route gradients back through the stored pattern.
    pub fn transpose_matmul_dense(&self, g: &Tensor) -> Result<Tensor> {
        if self.rows != g.rows() {
            return Err(AutodiffError::Shape {
                op: "sparse_transpose_matmul",
                left: self.shape(),
                right: g.shape(),
            });
        }
        let d = g.cols();
        let mut out = Tensor::zeros(self.cols, d);
        for i in 0..self.rows {
            let g_row = g.row(i);
            for (j, v) in self.row(i) {
                for (o, &b) in out.row_mut(j).iter_mut().zip(g_row) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }
}
