use std::fmt;
use std::str::FromStr;

use crate::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    /// Disk of the given radius, as a fraction of `min(n_row, n_col)`.
    Disk { radius: f64 },
    /// Axis-aligned rectangle; sizes are fractions of the image height and
    /// width.
    Rect { height: f64, width: f64 },
}

/// A constant-valued region of a phantom. Centers are normalized so the
/// same shape list describes an image at any resolution: `(0, 0)` is the top
/// left corner and `(1, 1)` the bottom right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub kind: ShapeKind,
    pub center_row: f64,
    pub center_col: f64,
    pub value: f64,
}

impl Shape {
    pub fn disk(center_row: f64, center_col: f64, radius: f64, value: f64) -> Self {
        Shape {
            kind: ShapeKind::Disk { radius },
            center_row,
            center_col,
            value,
        }
    }

    pub fn rect(center_row: f64, center_col: f64, height: f64, width: f64, value: f64) -> Self {
        Shape {
            kind: ShapeKind::Rect { height, width },
            center_row,
            center_col,
            value,
        }
    }

    /// Whether the center of pixel `(i, j)` lies inside the shape.
    pub fn contains(&self, n_row: usize, n_col: usize, i: usize, j: usize) -> bool {
        let (nr, nc) = (n_row as f64, n_col as f64);
        // pixel units
        let dy = i as f64 + 0.5 - self.center_row * nr;
        let dx = j as f64 + 0.5 - self.center_col * nc;
        match self.kind {
            ShapeKind::Disk { radius } => {
                let r = radius * nr.min(nc);
                dx * dx + dy * dy <= r * r
            }
            ShapeKind::Rect { height, width } => {
                dy.abs() <= 0.5 * height * nr && dx.abs() <= 0.5 * width * nc
            }
        }
    }
}

/// Parses `disk <row> <col> <radius> <value>` or
/// `rect <row> <col> <height> <width> <value>`.
impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().ok_or_else(|| "empty shape".to_string())?;
        let nums = parts
            .map(|p| p.parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite number in `{s}`"));
        }
        let shape = match (kind, nums.as_slice()) {
            ("disk", &[r, c, rad, v]) if rad >= 0.0 => Shape::disk(r, c, rad, v),
            ("rect", &[r, c, h, w, v]) if h >= 0.0 && w >= 0.0 => Shape::rect(r, c, h, w, v),
            ("disk", _) => return Err(format!("expected `disk row col radius value`, got `{s}`")),
            ("rect", _) => {
                return Err(format!("expected `rect row col height width value`, got `{s}`"))
            }
            (other, _) => return Err(format!("unknown shape kind `{other}`")),
        };
        if !(0.0..=1.0).contains(&shape.center_row) || !(0.0..=1.0).contains(&shape.center_col) {
            return Err(format!("center of `{s}` lies outside the unit square"));
        }
        Ok(shape)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ShapeKind::Disk { radius } => write!(
                f,
                "disk {} {} {} {}",
                self.center_row, self.center_col, radius, self.value
            ),
            ShapeKind::Rect { height, width } => write!(
                f,
                "rect {} {} {} {} {}",
                self.center_row, self.center_col, height, width, self.value
            ),
        }
    }
}

/// Piecewise-constant image: `background` everywhere, then each shape painted
/// in order, later shapes overwriting earlier ones.
pub fn phantom_piecewise(n_row: usize, n_col: usize, shapes: &[Shape], background: f64) -> ImageGrid {
    ImageGrid::from_fn(n_row, n_col, |i, j| {
        shapes
            .iter()
            .rev()
            .find(|s| s.contains(n_row, n_col, i, j))
            .map_or(background, |s| s.value)
    })
}

/// The default phantom: a large plate with two disks and a small insert.
pub fn default_shapes() -> Vec<Shape> {
    vec![
        Shape::rect(0.5, 0.5, 0.75, 0.7, 0.5),
        Shape::disk(0.4, 0.36, 0.16, 1.0),
        Shape::disk(0.64, 0.62, 0.12, 0.25),
        Shape::rect(0.28, 0.68, 0.12, 0.2, 0.8),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{apply_tv_diff, TvDifferenceOp};

    #[test]
    fn no_shapes_is_constant_background() {
        let img = phantom_piecewise(5, 7, &[], 0.3);
        assert!(img.values().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn centered_disk_jump_count() {
        let (n, disk) = (32, Shape::disk(0.5, 0.5, 0.3, 1.0));
        let img = phantom_piecewise(n, n, &[disk], 0.0);
        let inside = |i: usize, j: usize| disk.contains(n, n, i, j);
        let mut crossings = 0;
        for i in 0..n {
            for j in 0..n {
                if j + 1 < n && inside(i, j) != inside(i, j + 1) {
                    crossings += 1;
                }
                if i + 1 < n && inside(i, j) != inside(i + 1, j) {
                    crossings += 1;
                }
            }
        }
        let bx = apply_tv_diff(&TvDifferenceOp::new(n, n), &img).unwrap();
        let nnz = bx.iter().filter(|&&v| v != 0.0).count();
        assert!(crossings > 0);
        assert_eq!(nnz, crossings);
    }

    #[test]
    fn later_shapes_overwrite() {
        let a = Shape::rect(0.5, 0.4, 0.5, 0.5, 1.0);
        let b = Shape::rect(0.5, 0.6, 0.5, 0.5, 2.0);
        let img = phantom_piecewise(10, 10, &[a, b], 0.0);
        assert_eq!(img.get(5, 4), 2.0);
        assert_eq!(img.get(5, 2), 1.0);
        assert_eq!(img.get(5, 8), 2.0);
        assert_eq!(img.get(0, 0), 0.0);
        let values: std::collections::BTreeSet<u64> =
            img.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(values.len(), 3);
    }

    #[test]
    fn shape_strings_round_trip() {
        for s in ["disk 0.5 0.25 0.1 1", "rect 0.3 0.7 0.2 0.4 -0.5"] {
            let shape: Shape = s.parse().unwrap();
            assert_eq!(shape.to_string().parse::<Shape>().unwrap(), shape);
        }
        assert!("disk 0.5 0.5 0.1".parse::<Shape>().is_err());
        assert!("ellipse 0.5 0.5 0.1 1".parse::<Shape>().is_err());
        assert!("disk 1.5 0.5 0.1 1".parse::<Shape>().is_err());
        assert!("rect 0.5 0.5 x 0.1 1".parse::<Shape>().is_err());
    }
}
