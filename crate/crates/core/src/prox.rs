//! Soft-thresholding, the Moreau envelope of `τ‖·‖₁`, and the distance to the
//! ℓ1 subdifferential.

use crate::vecops;

/// Scalar soft-thresholding. `|v| ≤ τ` maps to exactly zero.
#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// `prox_{τ‖·‖₁}(ζ)`, componentwise.
pub fn prox_l1(zeta: &[f64], tau: f64) -> Vec<f64> {
    let mut out = vec![0.0; zeta.len()];
    prox_l1_into(zeta, tau, &mut out);
    out
}

pub fn prox_l1_into(zeta: &[f64], tau: f64, out: &mut [f64]) {
    debug_assert!(tau > 0.0);
    assert_eq!(zeta.len(), out.len());
    vecops::fill_with(out, |i| soft_threshold(zeta[i], tau));
}

/// Scalar Moreau envelope `min_z ½(z−v)² + τ|z|`.
#[inline]
pub fn moreau_scalar(v: f64, tau: f64) -> f64 {
    let a = v.abs();
    if a <= tau {
        0.5 * v * v
    } else {
        tau * a - 0.5 * tau * tau
    }
}

/// `½‖prox(ζ)−ζ‖² + τ‖prox(ζ)‖₁`.
pub fn moreau_env(zeta: &[f64], tau: f64) -> f64 {
    zeta.iter().map(|&v| moreau_scalar(v, tau)).sum()
}

/// `∇ Mor_τ(ζ) = ζ − prox_τ(ζ)`, i.e. the clamp of ζ to `[−τ, τ]`.
pub fn moreau_grad(zeta: &[f64], tau: f64) -> Vec<f64> {
    zeta.iter().map(|&v| v.clamp(-tau, tau)).collect()
}

/// Euclidean distance from `zstar` to `∂(α‖·‖₁)(z)`: per component,
/// `max(0, |z*ᵢ| − α)` where `zᵢ = 0` and `|z*ᵢ − α·sign(zᵢ)|` otherwise.
pub fn l1_subgradient_residual(z: &[f64], zstar: &[f64], alpha: f64) -> f64 {
    assert_eq!(z.len(), zstar.len(), "subgradient residual: length mismatch");
    z.iter()
        .zip(zstar)
        .map(|(&zi, &si)| {
            let d = if zi == 0.0 {
                (si.abs() - alpha).max(0.0)
            } else {
                (si - alpha * zi.signum()).abs()
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
