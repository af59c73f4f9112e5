use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{assert_dims, LinearMap};
use crate::image::read_csv_matrix;
use crate::{Error, Result};

/// Row-major dense matrix. A transposed copy is kept so that `Mᵀy` is also a
/// contiguous row sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    data_t: Vec<f64>,
}

fn transpose(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = data[r * cols + c];
        }
    }
    t
}

fn gemv(rows: usize, cols: usize, data: &[f64], x: &[f64], out: &mut [f64]) {
    let row_dot = |r: usize| {
        data[r * cols..(r + 1) * cols]
            .iter()
            .zip(x)
            .fold(0.0, |acc, (a, b)| acc + a * b)
    };
    #[cfg(feature = "parallel")]
    if rows * cols >= crate::vecops::PAR_THRESHOLD {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(r, o)| *o = row_dot(r));
        return;
    }
    for (r, o) in out.iter_mut().enumerate() {
        *o = row_dot(r);
    }
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config("matrix", "matrix dimensions must be positive"));
        }
        super::expect_len("dense matrix data", rows * cols, data.len())?;
        let data_t = transpose(rows, cols, &data);
        Ok(DenseMatrix {
            rows,
            cols,
            data,
            data_t,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::config("matrix", "rows have different lengths"));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self::from_row_major(n, n, data).expect("nonempty diagonal")
    }

    /// Headerless CSV, one matrix row per line.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let rows = read_csv_matrix(path)?;
        Self::from_rows(&rows).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Materializes any operator column by column.
    pub fn assemble(op: &dyn LinearMap) -> Self {
        let (m, n) = (op.range_dim(), op.domain_dim());
        let mut data = vec![0.0; m * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let col = op.apply(&e);
            e[c] = 0.0;
            for r in 0..m {
                data[r * n + c] = col[r];
            }
        }
        Self::from_row_major(m, n, data).expect("operator dimensions are positive")
    }
}

impl LinearMap for DenseMatrix {
    fn domain_dim(&self) -> usize {
        self.cols
    }
    fn range_dim(&self) -> usize {
        self.rows
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_dims(self, x.len(), out.len(), false);
        gemv(self.rows, self.cols, &self.data, x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_dims(self, y.len(), out.len(), true);
        gemv(self.cols, self.rows, &self.data_t, y, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{adjoint_mismatch, TvDifferenceOp};

    #[test]
    fn apply_and_adjoint() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.apply(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(m.adjoint(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert!(adjoint_mismatch(&m, 5, 3) < 1e-15);
    }

    #[test]
    fn assemble_reproduces_operator() {
        let op = TvDifferenceOp::new(3, 3);
        let d = DenseMatrix::assemble(&op);
        let x: Vec<f64> = (0..9).map(|k| (k * k) as f64).collect();
        assert_eq!(d.apply(&x), op.apply(&x));
    }

    #[test]
    fn csv_loading_and_ragged_rows() {
        let dir = std::env::temp_dir().join(format!("tvn-dense-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("a.csv");
        std::fs::write(&good, "1, 2\n3, 4\n5, 6\n").unwrap();
        let m = DenseMatrix::from_csv(&good).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 2));
        assert_eq!(m.get(2, 1), 6.0);
        let bad = dir.join("b.csv");
        std::fs::write(&bad, "1,2\nx,4\n").unwrap();
        assert!(DenseMatrix::from_csv(&bad).is_err());
        assert!(DenseMatrix::from_csv(dir.join("missing.csv")).is_err());
    }
}
