use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vecops;

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyData {
    pub data: Vec<f64>,
    /// Realized `‖b_noisy − b‖`.
    pub delta_abs: f64,
}

/// `b + rel_level·‖b‖/√m · g` with `g` standard normal drawn from `seed`, so
/// that `‖b_noisy − b‖ ≈ rel_level·‖b‖`.
pub fn add_noise(b: &[f64], rel_level: f64, seed: u64) -> NoisyData {
    assert!(rel_level >= 0.0, "noise level must be nonnegative");
    let m = b.len();
    let scale = if m == 0 {
        0.0
    } else {
        rel_level * vecops::norm2(b) / (m as f64).sqrt()
    };
    if scale == 0.0 {
        return NoisyData {
            data: b.to_vec(),
            delta_abs: 0.0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = b
        .iter()
        .map(|&bi| {
            let g: f64 = StandardNormal.sample(&mut rng);
            bi + scale * g
        })
        .collect();
    let delta_abs = vecops::dist2(&data, b);
    NoisyData { data, delta_abs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_level_is_identity() {
        let b = vec![1.0, -2.0, 3.0];
        let n = add_noise(&b, 0.0, 7);
        assert_eq!(n.data, b);
        assert_eq!(n.delta_abs, 0.0);
    }

    #[test]
    fn realized_level_near_target() {
        let b: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.01).cos() + 0.5).collect();
        for seed in 0..5 {
            let n = add_noise(&b, 0.05, seed);
            let target = 0.05 * vecops::norm2(&b);
            assert!((n.delta_abs / target - 1.0).abs() < 0.2);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let b = vec![0.5; 100];
        let a = add_noise(&b, 0.1, 42);
        let c = add_noise(&b, 0.1, 42);
        assert_eq!(a, c);
        assert_ne!(a.data, add_noise(&b, 0.1, 43).data);
    }
}
