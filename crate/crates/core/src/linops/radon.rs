use std::f64::consts::PI;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::sparse::{CsrMatrix, SparsePair};
use super::LinearMap;
use crate::{Error, Result};

/// Parallel-beam acquisition geometry.
///
/// The image covers `[−n_col/2, n_col/2] × [−n_row/2, n_row/2]` with unit
/// pixels, row 0 at the top. Projection angles are
/// `θ_a = angle_fraction · π · a / n_angles`; each angle has `n_rays` parallel
/// rays `{p : ⟨p, (cos θ, sin θ)⟩ = s}` whose offsets `s` are the centers of
/// `n_rays` equal bins spanning the image diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadonGeometry {
    pub n_row: usize,
    pub n_col: usize,
    pub n_angles: usize,
    pub n_rays: usize,
    pub angle_fraction: f64,
}

impl RadonGeometry {
    pub fn new(n_row: usize, n_col: usize, n_angles: usize, n_rays: usize) -> Self {
        RadonGeometry {
            n_row,
            n_col,
            n_angles,
            n_rays,
            angle_fraction: 1.0,
        }
    }

    pub fn with_angle_fraction(mut self, fraction: f64) -> Self {
        self.angle_fraction = fraction;
        self
    }

    pub fn angle(&self, a: usize) -> f64 {
        self.angle_fraction * PI * a as f64 / self.n_angles as f64
    }

    pub fn offset(&self, r: usize) -> f64 {
        let half_diag = 0.5 * ((self.n_row * self.n_row + self.n_col * self.n_col) as f64).sqrt();
        -half_diag + (r as f64 + 0.5) * 2.0 * half_diag / self.n_rays as f64
    }

    fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("problem.n_row", self.n_row),
            ("problem.n_col", self.n_col),
            ("problem.n_angles", self.n_angles),
            ("problem.n_rays", self.n_rays),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(self.angle_fraction > 0.0 && self.angle_fraction <= 1.0) {
            return Err(Error::config(
                "problem.angle_fraction",
                "must lie in (0, 1]",
            ));
        }
        Ok(())
    }

    /// Exact intersection lengths of one ray with the pixel grid, as
    /// `(flat pixel index, length)` pairs.
    pub fn ray_weights(&self, theta: f64, s: f64) -> Vec<(usize, f64)> {
        let (nr, nc) = (self.n_row as f64, self.n_col as f64);
        let (xmin, xmax, ymin, ymax) = (-nc / 2.0, nc / 2.0, -nr / 2.0, nr / 2.0);
        let (c, sn) = (theta.cos(), theta.sin());
        let (x0, y0) = (s * c, s * sn);
        let (dx, dy) = (-sn, c);
        const PARALLEL: f64 = 1e-12;

        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for (p0, d, lo, hi) in [(x0, dx, xmin, xmax), (y0, dy, ymin, ymax)] {
            if d.abs() < PARALLEL {
                if p0 < lo || p0 >= hi {
                    return Vec::new();
                }
            } else {
                let (a, b) = ((lo - p0) / d, (hi - p0) / d);
                t_lo = t_lo.max(a.min(b));
                t_hi = t_hi.min(a.max(b));
            }
        }
        if !(t_hi > t_lo) {
            return Vec::new();
        }

        let mut ts = vec![t_lo, t_hi];
        if dx.abs() >= PARALLEL {
            ts.extend((0..=self.n_col).map(|k| (xmin + k as f64 - x0) / dx));
        }
        if dy.abs() >= PARALLEL {
            ts.extend((0..=self.n_row).map(|k| (ymin + k as f64 - y0) / dy));
        }
        ts.retain(|&t| t >= t_lo && t <= t_hi);
        ts.sort_by(f64::total_cmp);

        let mut out: Vec<(usize, f64)> = Vec::new();
        for w in ts.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let tm = 0.5 * (w[0] + w[1]);
            let (x, y) = (x0 + tm * dx, y0 + tm * dy);
            let j = ((x - xmin).floor() as isize).clamp(0, self.n_col as isize - 1) as usize;
            let i = ((ymax - y).floor() as isize).clamp(0, self.n_row as isize - 1) as usize;
            let k = i * self.n_col + j;
            match out.last_mut() {
                Some((last, acc)) if *last == k => *acc += len,
                _ => out.push((k, len)),
            }
        }
        out
    }
}

/// Discrete Radon transform stored as a sparse system matrix of exact
/// ray–pixel intersection lengths, with its transpose as the adjoint.
#[derive(Debug, Clone)]
pub struct RadonOp {
    geometry: RadonGeometry,
    matrix: SparsePair,
}

impl RadonOp {
    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    pub fn system_matrix(&self) -> &CsrMatrix {
        &self.matrix.forward
    }
}

/// Builds the projector for the given geometry. Rays are ordered angle-major:
/// row `a · n_rays + r`.
pub fn radon_operator(geometry: RadonGeometry) -> Result<RadonOp> {
    geometry.validate()?;
    let n_rows = geometry.n_angles * geometry.n_rays;
    let ray = |q: usize| {
        let (a, r) = (q / geometry.n_rays, q % geometry.n_rays);
        geometry.ray_weights(geometry.angle(a), geometry.offset(r))
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<(usize, f64)>> = (0..n_rows).into_par_iter().map(ray).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<(usize, f64)>> = (0..n_rows).map(ray).collect();
    let forward = CsrMatrix::from_rows(geometry.n_row * geometry.n_col, rows);
    Ok(RadonOp {
        geometry,
        matrix: SparsePair::new(forward),
    })
}

impl LinearMap for RadonOp {
    fn domain_dim(&self) -> usize {
        self.matrix.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.matrix.range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.matrix.adjoint_into(y, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_mismatch;

    /// Chord length of the line through the rectangle, from its intersection
    /// points with the four edge lines.
    fn chord_through_rect(g: &RadonGeometry, theta: f64, s: f64) -> f64 {
        let (hx, hy) = (g.n_col as f64 / 2.0, g.n_row as f64 / 2.0);
        let (c, sn) = (theta.cos(), theta.sin());
        // line: c·x + sn·y = s
        let mut pts: Vec<(f64, f64)> = Vec::new();
        if sn.abs() > 1e-12 {
            for x in [-hx, hx] {
                let y = (s - c * x) / sn;
                if y >= -hy - 1e-12 && y <= hy + 1e-12 {
                    pts.push((x, y));
                }
            }
        }
        if c.abs() > 1e-12 {
            for y in [-hy, hy] {
                let x = (s - sn * y) / c;
                if x >= -hx - 1e-12 && x <= hx + 1e-12 {
                    pts.push((x, y));
                }
            }
        }
        let mut best: f64 = 0.0;
        for p in &pts {
            for q in &pts {
                best = best.max(((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt());
            }
        }
        best
    }

    #[test]
    fn single_pixel_single_ray() {
        let g = RadonGeometry::new(1, 1, 1, 1);
        let op = radon_operator(g).unwrap();
        assert_eq!(op.range_dim(), 1);
        assert!((op.apply(&[2.5])[0] - 2.5).abs() < 1e-14);
        // diagonal ray through the center of the pixel has chord √2
        let w = g.ray_weights(PI / 4.0, 0.0);
        assert_eq!(w.len(), 1);
        assert!((w[0].1 - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn unit_image_gives_chord_lengths() {
        for (nr, nc) in [(8, 8), (5, 9), (12, 7)] {
            let g = RadonGeometry::new(nr, nc, 13, 17).with_angle_fraction(0.9);
            let op = radon_operator(g).unwrap();
            let proj = op.apply(&vec![1.0; nr * nc]);
            for a in 0..g.n_angles {
                for r in 0..g.n_rays {
                    let want = chord_through_rect(&g, g.angle(a), g.offset(r));
                    let got = proj[a * g.n_rays + r];
                    assert!((got - want).abs() < 1e-8, "a={a} r={r}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn adjoint_is_exact_transpose() {
        let op = radon_operator(RadonGeometry::new(11, 9, 10, 15)).unwrap();
        assert!(adjoint_mismatch(&op, 8, 4) < 1e-12);
    }

    #[test]
    fn limited_angle_restricts_arc() {
        let g = RadonGeometry::new(4, 4, 4, 3).with_angle_fraction(0.5);
        assert!((g.angle(3) - 3.0 * PI / 8.0).abs() < 1e-15);
        assert!(radon_operator(g.with_angle_fraction(0.0)).is_err());
        assert!(radon_operator(g.with_angle_fraction(1.5)).is_err());
        assert!(radon_operator(RadonGeometry::new(4, 4, 0, 3)).is_err());
    }

    #[test]
    fn axis_aligned_ray_sums_a_column() {
        // θ = 0: the ray is the vertical line x = s; with 4 rays over a 4×4
        // image the offsets do not coincide with pixel edges.
        let g = RadonGeometry::new(4, 4, 1, 4);
        let op = radon_operator(g).unwrap();
        let x: Vec<f64> = (0..16).map(|k| (k % 4) as f64).collect();
        let proj = op.apply(&x);
        for (r, p) in proj.iter().enumerate() {
            let s = g.offset(r);
            if s.abs() >= 2.0 {
                assert_eq!(*p, 0.0);
            } else {
                let col = (s + 2.0).floor();
                assert!((p - 4.0 * col).abs() < 1e-12);
            }
        }
    }
}
