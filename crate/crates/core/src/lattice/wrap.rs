//! Monte Carlo estimate of the modulo-wrap event.
//!
//! A sum of uniform interferers plus Gaussian noise passes through the coarse
//! modulo unchanged unless some coordinate leaves `(-q/2, q/2]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::NestedLatticePair;
use crate::exec::Exec;
use crate::rng::{shard_sizes, stream_id, stream_rng};

const TAG_WRAP: u8 = 0x28;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WrapEstimate {
    pub probability: f64,
    pub wraps: u64,
    pub trials: u64,
    /// Coarse second moment over interference-plus-noise power, per
    /// dimension.
    pub mu: f64,
}

/// Each interferer is uniform on a cube with the given per-dimension
/// variance; noise is Gaussian with `noise_variance`. All in fine-lattice
/// units.
pub fn wrap_probability(
    pair: &NestedLatticePair,
    interferer_variances: &[f64],
    noise_variance: f64,
    trials: u64,
    seed: u64,
    shards: usize,
    exec: Exec,
) -> WrapEstimate {
    let sides: Vec<f64> = interferer_variances
        .iter()
        .map(|v| (12.0 * v.max(0.0)).sqrt())
        .collect();
    let sigma = noise_variance.max(0.0).sqrt();
    let half = pair.q() as f64 / 2.0;
    let dim = pair.dim();
    let sizes = shard_sizes(trials, shards);
    let counts = exec.map(sizes.len(), |s| {
        let mut rng = stream_rng(seed, stream_id(TAG_WRAP, 0, s as u64));
        let mut wraps = 0u64;
        for _ in 0..sizes[s] {
            let mut wrapped = false;
            for _ in 0..dim {
                let mut v = 0.0;
                for side in &sides {
                    v += side * (rng.random::<f64>() - 0.5);
                }
                if sigma > 0.0 {
                    v += sigma * rng.sample::<f64, _>(StandardNormal);
                }
                wrapped |= !(v > -half && v <= half);
            }
            wraps += u64::from(wrapped);
        }
        wraps
    });
    let wraps: u64 = counts.iter().sum();
    let power = noise_variance + interferer_variances.iter().sum::<f64>();
    WrapEstimate {
        probability: if trials == 0 {
            0.0
        } else {
            wraps as f64 / trials as f64
        },
        wraps,
        trials,
        mu: pair.coarse_second_moment() / power,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_channel_never_wraps() {
        let pair = NestedLatticePair::new(2, 4).unwrap();
        let e = wrap_probability(&pair, &[], 0.0, 1000, 1, 4, Exec::Parallel);
        assert_eq!(e.wraps, 0);
    }

    #[test]
    fn wide_cell_rarely_wraps() {
        // q = 16 with unit noise: wrap needs |Z| > 8, probability 2 Q(8).
        let pair = NestedLatticePair::new(1, 16).unwrap();
        let e = wrap_probability(&pair, &[], 1.0, 100_000, 3, 8, Exec::Parallel);
        assert!(e.probability < 0.01);
        assert!((e.mu - 256.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn crowded_cell_wraps_often() {
        let pair = NestedLatticePair::new(1, 2).unwrap();
        let e = wrap_probability(&pair, &[3.0], 1.0, 20_000, 3, 4, Exec::Parallel);
        assert!(e.mu < 1.0);
        assert!(e.probability > 0.5, "{}", e.probability);
    }

    #[test]
    fn deterministic_per_shard_layout() {
        let pair = NestedLatticePair::new(1, 4).unwrap();
        let a = wrap_probability(&pair, &[0.3], 0.5, 5000, 9, 3, Exec::Parallel);
        let b = wrap_probability(&pair, &[0.3], 0.5, 5000, 9, 3, Exec::Sequential);
        assert_eq!(a, b);
    }
}
