#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::sparse::CsrMatrix;
use super::{assert_dims, LinearMap};
use crate::{Error, Result};

/// Separable blur `X ↦ C_v X C_hᵀ` with replicate boundary handling, where
/// `C_h`, `C_v` are the 1-D stencils along rows and columns.
#[derive(Debug, Clone)]
pub struct BlurOp {
    n_row: usize,
    n_col: usize,
    horiz: CsrMatrix,
    horiz_t: CsrMatrix,
    vert: CsrMatrix,
    vert_t: CsrMatrix,
}

fn stencil(n: usize, weights: &[f64]) -> CsrMatrix {
    let radius = (weights.len() / 2) as isize;
    let last = n as isize - 1;
    let rows = (0..n as isize)
        .map(|c| {
            weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(k, &w)| ((c + k as isize - radius).clamp(0, last) as usize, w))
                .collect()
        })
        .collect();
    CsrMatrix::from_rows(n, rows)
}

/// Normalized binomial weights of length `2·radius + 1`.
pub fn binomial_kernel(radius: usize) -> Vec<f64> {
    let n = 2 * radius;
    let mut w = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; w.len() + 1];
        for k in 1..w.len() {
            next[k] = w[k - 1] + w[k];
        }
        w = next;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Builds the separable blur. `weights` must have length `2·radius + 1`, be
/// nonnegative, and sum to one.
pub fn blur_operator(
    n_row: usize,
    n_col: usize,
    radius: usize,
    weights: &[f64],
) -> Result<BlurOp> {
    if n_row == 0 || n_col == 0 {
        return Err(Error::config("problem.n_row", "image dimensions must be positive"));
    }
    if weights.len() != 2 * radius + 1 {
        return Err(Error::config(
            "problem.blur_weights",
            format!("expected {} weights for radius {radius}, got {}", 2 * radius + 1, weights.len()),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::config("problem.blur_weights", "weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::config(
            "problem.blur_weights",
            format!("weights must sum to 1 (sum is {total})"),
        ));
    }
    let horiz = stencil(n_col, weights);
    let vert = stencil(n_row, weights);
    Ok(BlurOp {
        n_row,
        n_col,
        horiz_t: horiz.transpose(),
        vert_t: vert.transpose(),
        horiz,
        vert,
    })
}

impl BlurOp {
    /// `out = V · (X · Hᵀ)` with `X` the image viewed as a matrix.
    fn sweep(&self, h: &CsrMatrix, v: &CsrMatrix, x: &[f64], out: &mut [f64]) {
        let nc = self.n_col;
        let mut tmp = vec![0.0; x.len()];
        let row_pass = |(src, dst): (&[f64], &mut [f64])| h.matvec_seq(src, dst);
        let col_pass = |tmp: &[f64], i: usize, dst: &mut [f64]| {
            dst.iter_mut().for_each(|d| *d = 0.0);
            for (k, w) in v.row(i) {
                let src = &tmp[k * nc..(k + 1) * nc];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        };
        #[cfg(feature = "parallel")]
        if x.len() >= crate::vecops::PAR_THRESHOLD {
            x.par_chunks(nc).zip(tmp.par_chunks_mut(nc)).for_each(row_pass);
            out.par_chunks_mut(nc)
                .enumerate()
                .for_each(|(i, dst)| col_pass(&tmp, i, dst));
            return;
        }
        x.chunks(nc).zip(tmp.chunks_mut(nc)).for_each(row_pass);
        out.chunks_mut(nc)
            .enumerate()
            .for_each(|(i, dst)| col_pass(&tmp, i, dst));
    }
}

impl LinearMap for BlurOp {
    fn domain_dim(&self) -> usize {
        self.n_row * self.n_col
    }
    fn range_dim(&self) -> usize {
        self.n_row * self.n_col
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_dims(self, x.len(), out.len(), false);
        self.sweep(&self.horiz, &self.vert, x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_dims(self, y.len(), out.len(), true);
        self.sweep(&self.horiz_t, &self.vert_t, y, out)
    }
}
