#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{assert_dims, LinearMap};

/// Compressed sparse row matrix. Used as the stored form of the projector and
/// the 1-D blur stencils; the transpose is materialized so that both the
/// forward and adjoint products are row-parallel gathers.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Duplicate columns within a
    /// row are summed; entries are stored in ascending column order.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n_cols, "column {c} out of range {n_cols}");
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
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
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Four interleaved partial sums break the add dependency chain; the
    /// order is fixed, so the result is still deterministic.
    #[inline]
    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        let idx = &self.indices[span.clone()];
        let val = &self.values[span];
        let mut acc = [0.0; 4];
        let mut ic = idx.chunks_exact(4);
        let mut vc = val.chunks_exact(4);
        for (i, v) in (&mut ic).zip(&mut vc) {
            acc[0] += v[0] * x[i[0]];
            acc[1] += v[1] * x[i[1]];
            acc[2] += v[2] * x[i[2]];
            acc[3] += v[3] * x[i[3]];
        }
        for (&c, &v) in ic.remainder().iter().zip(vc.remainder()) {
            acc[0] += v * x[c];
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3])
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in order, so each transposed row ends up sorted.
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            indptr,
            indices,
            values,
        }
    }

    pub fn matvec_seq(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, x);
        }
    }

    #[cfg(feature = "parallel")]
    pub fn matvec_par(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut()
            .with_min_len(256)
            .enumerate()
            .for_each(|(r, o)| *o = self.row_dot(r, x));
    }

    /// `out = M x`; row-parallel under the `parallel` feature. Each row is a
    /// fixed-order sum, so the result does not depend on the thread count.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "csr matvec: input length");
        assert_eq!(out.len(), self.n_rows, "csr matvec: output length");
        #[cfg(feature = "parallel")]
        if self.nnz() >= crate::vecops::PAR_THRESHOLD {
            return self.matvec_par(x, out);
        }
        self.matvec_seq(x, out)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] += v;
            }
        }
        dense
    }
}

/// A sparse operator with its transpose stored alongside.
#[derive(Debug, Clone)]
pub(crate) struct SparsePair {
    pub forward: CsrMatrix,
    pub transpose: CsrMatrix,
}

impl SparsePair {
    pub fn new(forward: CsrMatrix) -> Self {
        let transpose = forward.transpose();
        SparsePair { forward, transpose }
    }
}

impl LinearMap for SparsePair {
    fn domain_dim(&self) -> usize {
        self.forward.n_cols
    }
    fn range_dim(&self) -> usize {
        self.forward.n_rows
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_dims(self, x.len(), out.len(), false);
        self.forward.matvec(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_dims(self, y.len(), out.len(), true);
        self.transpose.matvec(y, out)
    }
}
