//! First-order reference methods sharing the residual and log format of
//! [`crate::alm`]: Chambolle–Pock, ADMM, and gradient descent with
//! Barzilai–Borwein steps on a smoothed objective.

mod admm;
mod chambolle_pock;
mod smoothed_bb;

pub use admm::{admm, AdmmParams, ZUpdate};
pub use chambolle_pock::{chambolle_pock, CpParams};
pub use smoothed_bb::{smoothed_bb, smoothed_gradient, BbParams};

use crate::metrics::{active_count, errors_vs_reference, IterationRecord, Solution, Status, Stopwatch};

/// Collects records with `rel_residual = r/r⁰` and optional reference errors.
struct Recorder<'a> {
    reference: Option<&'a [f64]>,
    clock: Stopwatch,
    r0: Option<f64>,
    records: Vec<IterationRecord>,
    total_cg: usize,
}

impl<'a> Recorder<'a> {
    fn new(reference: Option<&'a [f64]>) -> Self {
        Recorder {
            reference,
            clock: Stopwatch::start(),
            r0: None,
            records: Vec::new(),
            total_cg: 0,
        }
    }

    /// Records iterate `k` and returns `r/r⁰`; the first call fixes `r⁰`.
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, k: usize, sigma: f64, r: f64, x: &[f64], z: &[f64], inner: usize, cg: usize) -> f64 {
        let r0 = *self.r0.get_or_insert(r);
        let rel = if r0 > 0.0 { r / r0 } else { 0.0 };
        let (err2, err_inf) = self
            .reference
            .map_or((None, None), |x_ref| errors_vs_reference(x, x_ref));
        self.total_cg += cg;
        self.records.push(IterationRecord {
            k,
            sigma,
            rel_residual: rel,
            err2,
            err_inf,
            time_s: self.clock.seconds(),
            inner_iters: inner,
            cg_iters: cg,
            active_count: active_count(z),
        });
        rel
    }

    fn finish(self, x: Vec<f64>, z: Vec<f64>, zstar: Vec<f64>, status: Status) -> Solution {
        Solution {
            x,
            z,
            zstar,
            status,
            r0: self.r0.unwrap_or(0.0),
            records: self.records,
            total_cg: self.total_cg,
            elapsed_s: self.clock.seconds(),
        }
    }
}

/// Relative residuals beyond this are treated as divergence.
pub const BLOW_UP: f64 = 1e12;

/// Stop test shared by all baselines.
fn stop_status(rel: f64, eps_opt: f64) -> Option<Status> {
    if rel <= eps_opt {
        Some(Status::Converged)
    } else if !rel.is_finite() || rel > BLOW_UP {
        Some(Status::Diverged)
    } else {
        None
    }
}
