//! Dense vector kernels.
//!
//! Reductions are computed chunk-wise: each block of [`CHUNK`] entries is
//! summed left to right, then the block sums are added in order. The parallel
//! path evaluates the blocks concurrently but combines them in the same order,
//! so `seq` and `par` agree bit for bit regardless of thread count.

/// Block length for reductions.
pub const CHUNK: usize = 4096;

/// Below this length the dispatching functions stay sequential.
pub const PAR_THRESHOLD: usize = 1 << 15;

#[inline]
fn block_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

#[inline]
fn block_abs_sum(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, x| acc + x.abs())
}

#[inline]
fn block_abs_max(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

fn combine(blocks: impl Iterator<Item = f64>) -> f64 {
    blocks.fold(0.0, |acc, s| acc + s)
}

pub mod seq {
    use super::*;

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len(), "dot: length mismatch");
        combine(a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(|(x, y)| block_dot(x, y)))
    }

    pub fn abs_sum(a: &[f64]) -> f64 {
        combine(a.chunks(CHUNK).map(block_abs_sum))
    }

    pub fn abs_max(a: &[f64]) -> f64 {
        a.chunks(CHUNK).map(block_abs_max).fold(0.0, f64::max)
    }

    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), y.len(), "axpy: length mismatch");
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn fill_with<F: Fn(usize) -> f64>(out: &mut [f64], f: F) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }
}

#[cfg(feature = "parallel")]
pub mod par {
    use super::*;
    use rayon::prelude::*;

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len(), "dot: length mismatch");
        let blocks: Vec<f64> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(x, y)| block_dot(x, y))
            .collect();
        combine(blocks.into_iter())
    }

    pub fn abs_sum(a: &[f64]) -> f64 {
        let blocks: Vec<f64> = a.par_chunks(CHUNK).map(block_abs_sum).collect();
        combine(blocks.into_iter())
    }

    pub fn abs_max(a: &[f64]) -> f64 {
        a.par_chunks(CHUNK).map(block_abs_max).reduce(|| 0.0, f64::max)
    }

    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), y.len(), "axpy: length mismatch");
        y.par_iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
    }

    pub fn fill_with<F: Fn(usize) -> f64 + Sync>(out: &mut [f64], f: F) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }
}

macro_rules! dispatch {
    ($len:expr, $name:ident ( $($arg:expr),* )) => {{
        #[cfg(feature = "parallel")]
        {
            if $len >= PAR_THRESHOLD {
                par::$name($($arg),*)
            } else {
                seq::$name($($arg),*)
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            seq::$name($($arg),*)
        }
    }};
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    dispatch!(a.len(), dot(a, b))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    dispatch!(a.len(), abs_sum(a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    dispatch!(a.len(), abs_max(a))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    dispatch!(y.len(), axpy(alpha, x, y))
}

/// `out[i] = f(i)` for every index.
pub fn fill_with<F: Fn(usize) -> f64 + Sync>(out: &mut [f64], f: F) {
    dispatch!(out.len(), fill_with(out, f))
}

/// `a - b` as a new vector.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "sub: length mismatch");
    let mut out = vec![0.0; a.len()];
    fill_with(&mut out, |i| a[i] - b[i]);
    out
}

/// `‖a - b‖₂` without allocating.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dist2: length mismatch");
    combine(a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(|(x, y)| {
        x.iter()
            .zip(y)
            .fold(0.0, |acc, (p, q)| acc + (p - q) * (p - q))
    }))
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5).collect()
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a = sample(10_000);
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 0.25).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9 * naive.abs().max(1.0));
    }

    #[test]
    fn norms() {
        let v = [3.0, -4.0, 0.0];
        assert_eq!(norm2(&v), 5.0);
        assert_eq!(norm1(&v), 7.0);
        assert_eq!(norm_inf(&v), 4.0);
        assert_eq!(dist2(&v, &[0.0, 0.0, 0.0]), 5.0);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_reductions_are_bit_identical() {
        let a = sample(3 * PAR_THRESHOLD + 17);
        let b: Vec<f64> = a.iter().rev().copied().collect();
        assert_eq!(seq::dot(&a, &b).to_bits(), par::dot(&a, &b).to_bits());
        assert_eq!(seq::abs_sum(&a).to_bits(), par::abs_sum(&a).to_bits());
        assert_eq!(seq::abs_max(&a), par::abs_max(&a));
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let d = pool.install(|| dot(&a, &b));
            assert_eq!(d.to_bits(), seq::dot(&a, &b).to_bits());
        }
    }
}
