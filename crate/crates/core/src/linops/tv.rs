#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{assert_dims, expect_len, LinearMap};
use crate::{ImageGrid, Result};

/// Anisotropic forward-difference operator `B`.
///
/// Output layout: the `n_row·(n_col−1)` horizontal differences
/// `x[i][j+1] − x[i][j]` row by row, followed by the `(n_row−1)·n_col`
/// vertical differences `x[i+1][j] − x[i][j]`, also row by row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TvDifferenceOp {
    n_row: usize,
    n_col: usize,
}

impl TvDifferenceOp {
    pub fn new(n_row: usize, n_col: usize) -> Self {
        assert!(n_row > 0 && n_col > 0, "image dimensions must be positive");
        TvDifferenceOp { n_row, n_col }
    }

    pub fn n_row(&self) -> usize {
        self.n_row
    }

    pub fn n_col(&self) -> usize {
        self.n_col
    }

    pub fn n_horizontal(&self) -> usize {
        self.n_row * (self.n_col - 1)
    }

    pub fn n_vertical(&self) -> usize {
        (self.n_row - 1) * self.n_col
    }

    /// Row `k` of `B` as `(minus_pixel, plus_pixel)` flat indices.
    pub fn edge(&self, k: usize) -> (usize, usize) {
        let nh = self.n_horizontal();
        if k < nh {
            let (i, j) = (k / (self.n_col - 1), k % (self.n_col - 1));
            let p = i * self.n_col + j;
            (p, p + 1)
        } else {
            let p = k - nh;
            (p, p + self.n_col)
        }
    }

    fn forward_rows(&self, x: &[f64], out: &mut [f64], row_range: std::ops::Range<usize>) {
        // `out` is the horizontal block for the given rows
        let w = self.n_col - 1;
        for (r, i) in row_range.enumerate() {
            let src = &x[i * self.n_col..(i + 1) * self.n_col];
            let dst = &mut out[r * w..(r + 1) * w];
            for j in 0..w {
                dst[j] = src[j + 1] - src[j];
            }
        }
    }

    fn adjoint_pixel(&self, y: &[f64], i: usize, j: usize) -> f64 {
        let (nr, nc) = (self.n_row, self.n_col);
        let nh = self.n_horizontal();
        let w = nc - 1;
        let mut acc = 0.0;
        if j + 1 < nc {
            acc -= y[i * w + j];
        }
        if j > 0 {
            acc += y[i * w + j - 1];
        }
        if i + 1 < nr {
            acc -= y[nh + i * nc + j];
        }
        if i > 0 {
            acc += y[nh + (i - 1) * nc + j];
        }
        acc
    }
}

impl LinearMap for TvDifferenceOp {
    fn domain_dim(&self) -> usize {
        self.n_row * self.n_col
    }

    fn range_dim(&self) -> usize {
        self.n_horizontal() + self.n_vertical()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_dims(self, x.len(), out.len(), false);
        let nc = self.n_col;
        let (horiz, vert) = out.split_at_mut(self.n_horizontal());
        #[cfg(feature = "parallel")]
        if x.len() >= crate::vecops::PAR_THRESHOLD {
            let w = nc - 1;
            if w > 0 {
                horiz
                    .par_chunks_mut(w)
                    .enumerate()
                    .for_each(|(i, dst)| self.forward_rows(x, dst, i..i + 1));
            }
            vert.par_chunks_mut(nc).enumerate().for_each(|(i, dst)| {
                for j in 0..nc {
                    dst[j] = x[(i + 1) * nc + j] - x[i * nc + j];
                }
            });
            return;
        }
        self.forward_rows(x, horiz, 0..self.n_row);
        for (k, v) in vert.iter_mut().enumerate() {
            *v = x[k + nc] - x[k];
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_dims(self, y.len(), out.len(), true);
        let nc = self.n_col;
        #[cfg(feature = "parallel")]
        if out.len() >= crate::vecops::PAR_THRESHOLD {
            out.par_chunks_mut(nc).enumerate().for_each(|(i, row)| {
                for (j, o) in row.iter_mut().enumerate() {
                    *o = self.adjoint_pixel(y, i, j);
                }
            });
            return;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.adjoint_pixel(y, k / nc, k % nc);
        }
    }
}

/// `B x` for an image; fails if the image does not match the operator.
pub fn apply_tv_diff(op: &TvDifferenceOp, x: &ImageGrid) -> Result<Vec<f64>> {
    expect_len("tv difference rows", op.n_row, x.n_row())?;
    expect_len("tv difference columns", op.n_col, x.n_col())?;
    Ok(op.apply(x.values()))
}

/// `Bᵀ y` reshaped to an image.
pub fn apply_tv_diff_adjoint(op: &TvDifferenceOp, y: &[f64]) -> Result<ImageGrid> {
    let values = op.checked_adjoint(y)?;
    ImageGrid::new(op.n_row, op.n_col, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_mismatch;

    /// Dense `B` assembled directly from the two difference formulas.
    fn dense_b(n_row: usize, n_col: usize) -> Vec<Vec<f64>> {
        let n = n_row * n_col;
        let mut rows = Vec::new();
        for i in 0..n_row {
            for j in 0..n_col.saturating_sub(1) {
                let mut r = vec![0.0; n];
                r[i * n_col + j + 1] = 1.0;
                r[i * n_col + j] = -1.0;
                rows.push(r);
            }
        }
        for i in 0..n_row.saturating_sub(1) {
            for j in 0..n_col {
                let mut r = vec![0.0; n];
                r[(i + 1) * n_col + j] = 1.0;
                r[i * n_col + j] = -1.0;
                rows.push(r);
            }
        }
        rows
    }

    #[test]
    fn one_by_two() {
        let op = TvDifferenceOp::new(1, 2);
        let x = ImageGrid::new(1, 2, vec![3.0, 5.5]).unwrap();
        assert_eq!(apply_tv_diff(&op, &x).unwrap(), vec![2.5]);
        let adj = apply_tv_diff_adjoint(&op, &[1.0]).unwrap();
        assert_eq!(adj.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let op = TvDifferenceOp::new(2, 2);
        let x = ImageGrid::filled(2, 2, 1.0);
        assert_eq!(apply_tv_diff(&op, &x).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn two_by_two_hand_example() {
        let op = TvDifferenceOp::new(2, 2);
        let x = ImageGrid::new(2, 2, vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(apply_tv_diff(&op, &x).unwrap(), vec![1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_adjoint() {
        let op = TvDifferenceOp::new(3, 2);
        let img = apply_tv_diff_adjoint(&op, &vec![0.0; op.range_dim()]).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_dense_assembly_up_to_16x16() {
        for (nr, nc) in [(1, 1), (1, 5), (4, 1), (3, 4), (7, 5), (16, 16)] {
            let op = TvDifferenceOp::new(nr, nc);
            let dense = dense_b(nr, nc);
            assert_eq!(op.range_dim(), dense.len());
            let x: Vec<f64> = (0..nr * nc).map(|k| ((k * 37) % 11) as f64 - 4.0).collect();
            let y: Vec<f64> = (0..op.range_dim()).map(|k| ((k * 13) % 7) as f64 - 3.0).collect();
            let bx = op.apply(&x);
            let bty = op.adjoint(&y);
            for (r, row) in dense.iter().enumerate() {
                let v: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                assert_eq!(bx[r], v);
                let (minus, plus) = op.edge(r);
                assert_eq!(row[minus], -1.0);
                assert_eq!(row[plus], 1.0);
            }
            for c in 0..nr * nc {
                let v: f64 = dense.iter().zip(&y).map(|(row, yv)| row[c] * yv).sum();
                assert_eq!(bty[c], v);
            }
        }
    }

    #[test]
    fn adjoint_identity_4x4() {
        let op = TvDifferenceOp::new(4, 4);
        assert!(adjoint_mismatch(&op, 10, 11) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let op = TvDifferenceOp::new(2, 3);
        assert!(apply_tv_diff(&op, &ImageGrid::filled(3, 2, 0.0)).is_err());
        assert!(apply_tv_diff_adjoint(&op, &[0.0; 3]).is_err());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_path_matches_sequential() {
        let op = TvDifferenceOp::new(200, 190);
        let x: Vec<f64> = (0..op.domain_dim()).map(|k| (k as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..op.range_dim()).map(|k| (k as f64 * 0.11).cos()).collect();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let (bx1, bty1) = pool.install(|| (op.apply(&x), op.adjoint(&y)));
        let (bx, bty) = (op.apply(&x), op.adjoint(&y));
        assert_eq!(bx, bx1);
        assert_eq!(bty, bty1);
        let mut seq = vec![0.0; op.range_dim()];
        op.forward_rows(&x, &mut seq[..op.n_horizontal()], 0..200);
        assert_eq!(&seq[..op.n_horizontal()], &bx[..op.n_horizontal()]);
    }
}
