//! Images as row-major grids, with CSV and 16-bit PGM I/O.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// An `n_row × n_col` image. Pixel `(i, j)` (zero-based) lives at flat index
/// `i * n_col + j`; every operator in the crate uses this convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    n_row: usize,
    n_col: usize,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(n_row: usize, n_col: usize, values: Vec<f64>) -> Result<Self> {
        if n_row == 0 || n_col == 0 {
            return Err(Error::config("image", "image dimensions must be positive"));
        }
        crate::linops::expect_len("image values", n_row * n_col, values.len())?;
        Ok(ImageGrid {
            n_row,
            n_col,
            values,
        })
    }

    pub fn filled(n_row: usize, n_col: usize, value: f64) -> Self {
        ImageGrid {
            n_row,
            n_col,
            values: vec![value; n_row * n_col],
        }
    }

    pub fn from_fn(n_row: usize, n_col: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let values = (0..n_row * n_col).map(|k| f(k / n_col, k % n_col)).collect();
        ImageGrid {
            n_row,
            n_col,
            values,
        }
    }

    pub fn n_row(&self) -> usize {
        self.n_row
    }

    pub fn n_col(&self) -> usize {
        self.n_col
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_col + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// One CSV row per image row, no header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        for row in self.values.chunks(self.n_col) {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let rows = read_csv_matrix(path)?;
        let n_row = rows.len();
        let n_col = rows.first().map_or(0, Vec::len);
        ImageGrid::new(n_row, n_col, rows.concat())
            .map_err(|e| Error::parse(path, e.to_string()))
    }

    /// Binary (P5) PGM with maxval 65535. Values are min–max scaled; a
    /// constant image is written as all zeros.
    pub fn write_pgm16(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut bytes = Vec::with_capacity(2 * self.len() + 32);
        write!(bytes, "P5\n{} {}\n65535\n", self.n_col, self.n_row).unwrap();
        for &v in &self.values {
            let level = if span > 0.0 && span.is_finite() {
                ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            bytes.extend_from_slice(&level.to_be_bytes());
        }
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads an 8- or 16-bit binary PGM; pixel values are divided by maxval.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut raw = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut raw))
            .map_err(|e| Error::io(path, e))?;
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < raw.len() && raw[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < raw.len() && raw[pos] == b'#' {
                while pos < raw.len() && raw[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < raw.len() && !raw[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::parse(path, "truncated PGM header"));
            }
            fields.push(String::from_utf8_lossy(&raw[start..pos]).into_owned());
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        if fields[0] != "P5" {
            return Err(Error::parse(path, "only binary (P5) PGM is supported"));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(path, format!("bad PGM header field `{s}`")))
        };
        let (n_col, n_row, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(Error::parse(path, "PGM maxval out of range"));
        }
        let width = if maxval > 255 { 2 } else { 1 };
        let raster = raw.get(pos..).unwrap_or_default();
        if raster.len() < n_row * n_col * width {
            return Err(Error::parse(path, "PGM raster shorter than header claims"));
        }
        let values = (0..n_row * n_col)
            .map(|k| {
                let level = if width == 2 {
                    u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as f64
                } else {
                    raster[k] as f64
                };
                level / maxval as f64
            })
            .collect();
        ImageGrid::new(n_row, n_col, values).map_err(|e| Error::parse(path, e.to_string()))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

/// Reads a headerless CSV of numbers; all rows must have the same length.
pub(crate) fn read_csv_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::parse(path, format!("row {}: `{f}` is not a number", r + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    path,
                    format!("row {} has {} columns, expected {}", r + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "empty file"));
    }
    Ok(rows)
}
