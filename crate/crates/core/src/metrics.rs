//! Per-iteration records, errors against a reference solution, and CSV run
//! logs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::vecops;
use crate::{Error, Result};

/// Header of every run log.
pub const LOG_HEADER: [&str; 9] = [
    "k",
    "sigma",
    "rel_residual",
    "err2",
    "err_inf",
    "time_s",
    "inner_iters",
    "cg_iters",
    "active_count",
];

/// One row of a run log. Row `k` describes the iterate after `k` outer
/// iterations; `inner_iters` and `cg_iters` count the work spent producing
/// it, and `time_s` is wall time since the solve started.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub sigma: f64,
    pub rel_residual: f64,
    pub err2: Option<f64>,
    pub err_inf: Option<f64>,
    pub time_s: f64,
    pub inner_iters: usize,
    pub cg_iters: usize,
    /// `|I(z)|`, the number of nonzero entries of `z`.
    pub active_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// The iteration produced non-finite values and was stopped.
    Diverged,
}

impl Status {
    pub fn is_converged(self) -> bool {
        self == Status::Converged
    }
}

/// Final iterate of any solver together with its log.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub zstar: Vec<f64>,
    pub status: Status,
    /// Initial residual `r⁰`.
    pub r0: f64,
    pub records: Vec<IterationRecord>,
    /// Number of CG iterations across the whole solve.
    pub total_cg: usize,
    pub elapsed_s: f64,
}

impl Solution {
    pub fn final_rel_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.rel_residual)
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }
}

/// Monotonic wall clock started at solve entry.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }

    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::start()
    }
}

/// `(‖x − x_ref‖₂/‖x_ref‖₂, ‖x − x_ref‖∞/‖x_ref‖∞)`; each entry is `None`
/// when the corresponding reference norm vanishes.
pub fn errors_vs_reference(x: &[f64], x_ref: &[f64]) -> (Option<f64>, Option<f64>) {
    assert_eq!(x.len(), x_ref.len(), "reference length mismatch");
    let d = vecops::sub(x, x_ref);
    let (n2, ninf) = (vecops::norm2(x_ref), vecops::norm_inf(x_ref));
    let err2 = (n2 > 0.0).then(|| vecops::norm2(&d) / n2);
    let err_inf = (ninf > 0.0).then(|| vecops::norm_inf(&d) / ninf);
    (err2, err_inf)
}

/// Number of nonzero entries.
pub fn active_count(z: &[f64]) -> usize {
    z.iter().filter(|&&v| v != 0.0).count()
}

fn real(v: f64) -> String {
    // shortest representation that parses back to the same bits
    format!("{v:e}")
}

pub fn write_run_log(records: &[IterationRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    };
    w.write_record(LOG_HEADER).map_err(to_err)?;
    for r in records {
        let opt = |v: Option<f64>| v.map(real).unwrap_or_default();
        w.write_record([
            r.k.to_string(),
            real(r.sigma),
            real(r.rel_residual),
            opt(r.err2),
            opt(r.err_inf),
            real(r.time_s),
            r.inner_iters.to_string(),
            r.cg_iters.to_string(),
            r.active_count.to_string(),
        ])
        .map_err(to_err)?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub fn read_run_log(path: impl AsRef<Path>) -> Result<Vec<IterationRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    })?;
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    if header.iter().ne(LOG_HEADER) {
        return Err(Error::parse(path, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| Error::parse(path, format!("row {}: bad `{}`", line + 1, LOG_HEADER[i]));
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let int = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
        let opt = |i: usize| match field(i) {
            "" => Ok(None),
            s => s.parse::<f64>().map(Some).map_err(|_| bad(i)),
        };
        out.push(IterationRecord {
            k: int(0)?,
            sigma: float(1)?,
            rel_residual: float(2)?,
            err2: opt(3)?,
            err_inf: opt(4)?,
            time_s: float(5)?,
            inner_iters: int(6)?,
            cg_iters: int(7)?,
            active_count: int(8)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("tvnewton-{}-{name}", std::process::id()))
    }

    #[test]
    fn identical_and_doubled() {
        let x = [1.0, -2.0, 0.5];
        assert_eq!(errors_vs_reference(&x, &x), (Some(0.0), Some(0.0)));
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert_eq!(errors_vs_reference(&y, &x), (Some(1.0), Some(1.0)));
        assert_eq!(errors_vs_reference(&x, &[0.0; 3]), (None, None));
    }

    #[test]
    fn random_pair_against_direct_norms() {
        let x = [0.3, 1.1, -0.7, 2.0];
        let r = [0.25, 1.0, -0.5, 2.5];
        let d: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - b).collect();
        let e2 = d.iter().map(|v| v * v).sum::<f64>().sqrt() / r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let einf = d.iter().fold(0.0f64, |m, v| m.max(v.abs())) / 2.5;
        let (a, b) = errors_vs_reference(&x, &r);
        assert!((a.unwrap() - e2).abs() < 1e-15);
        assert!((b.unwrap() - einf).abs() < 1e-15);
    }

    #[test]
    fn empty_log_is_header_only() {
        let p = tmp("empty.csv");
        write_run_log(&[], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.trim_end(), LOG_HEADER.join(","));
        assert!(read_run_log(&p).unwrap().is_empty());
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn round_trip_is_lossless() {
        let recs = vec![
            IterationRecord {
                k: 0,
                sigma: 10.0 / 3.0,
                rel_residual: 1.0,
                err2: None,
                err_inf: None,
                time_s: 0.0,
                inner_iters: 0,
                cg_iters: 0,
                active_count: 12,
            },
            IterationRecord {
                k: 1,
                sigma: std::f64::consts::PI * 1e7,
                rel_residual: 1.234_567_890_123_456_7e-11,
                err2: Some(0.1 + 0.2),
                err_inf: Some(f64::MIN_POSITIVE),
                time_s: 0.012_345_678_901_234_56,
                inner_iters: 7,
                cg_iters: 123,
                active_count: 0,
            },
        ];
        let p = tmp("rt.csv");
        write_run_log(&recs, &p).unwrap();
        assert_eq!(read_run_log(&p).unwrap(), recs);
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn missing_file_names_path() {
        let p = tmp("does-not-exist.csv");
        match read_run_log(&p) {
            Err(Error::Io { path, .. }) => assert_eq!(path, p),
            other => panic!("{other:?}"),
        }
    }
}
