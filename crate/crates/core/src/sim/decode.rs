//! Point-to-point modulo-lattice channel.

use rand::Rng;
use rand_distr::StandardNormal;

use super::SimError;
use crate::exec::Exec;
use crate::lattice::{LatticeError, NestedLatticePair};
use crate::rng::{shard_sizes, stream_id, stream_rng, SimRng};

/// Largest codebook the decoders accept.
pub const MAX_CODEBOOK: u128 = 1_000_000;

const TAG_P2P: u8 = 0x30;

/// A nested lattice codebook scaled onto the channel, with its fixed dither.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeCode {
    pub pair: NestedLatticePair,
    /// Channel-units length of one fine-lattice step.
    pub amplitude: f64,
    pub dither: Vec<f64>,
}

impl LatticeCode {
    /// Scales `pair` so that its dithered power per dimension is at most
    /// `power`, whatever the dither.
    pub fn with_power(pair: NestedLatticePair, power: f64, dither: Vec<f64>) -> Self {
        LatticeCode {
            pair,
            amplitude: (power / pair.max_dithered_power()).sqrt(),
            dither,
        }
    }

    pub fn check_size(&self) -> Result<(), SimError> {
        let size = self.pair.codebook_size();
        if size > MAX_CODEBOOK {
            return Err(LatticeError::CodebookTooLarge {
                size,
                limit: MAX_CODEBOOK,
            }
            .into());
        }
        Ok(())
    }

    /// Transmitted channel vector for codebook point `t`.
    pub fn transmit(&self, t: &[i64]) -> Vec<f64> {
        t.iter()
            .zip(&self.dither)
            .map(|(&v, &d)| {
                self.amplitude * crate::lattice::mod_centered(v as f64 + d, self.pair.q() as f64)
            })
            .collect()
    }

    pub fn random_point(&self, rng: &mut SimRng) -> Vec<i64> {
        self.pair
            .point(rng.random_range(0..self.pair.codebook_size() as u64))
    }
}

pub(crate) fn gaussian(rng: &mut SimRng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn trial(code: &LatticeCode, interference_power: f64, noise_std: f64, rng: &mut SimRng) -> bool {
    let t = code.random_point(rng);
    let x = code.transmit(&t);
    let side = (12.0 * interference_power).sqrt();
    let q = code.pair.q() as f64;
    let v: Vec<f64> = x
        .iter()
        .zip(&code.dither)
        .map(|(&xi, &d)| {
            let mut y = xi;
            if side > 0.0 {
                y += side * (rng.random::<f64>() - 0.5);
            }
            if noise_std > 0.0 {
                y += noise_std * gaussian(rng);
            }
            crate::lattice::mod_centered(y / code.amplitude - d, q)
        })
        .collect();
    code.pair.decode_nearest(&v) == t
}

/// One use of the modulo-lattice channel: uniform `t`, uniform interference
/// of the given power and Gaussian noise. Returns whether the nearest-point
/// decoder recovers `t`.
pub fn mod_channel_decode_trial(
    code: &LatticeCode,
    interference_power: f64,
    noise_variance: f64,
    seed: u64,
) -> Result<bool, SimError> {
    code.check_size()?;
    let mut rng = stream_rng(seed, stream_id(TAG_P2P, 1, 0));
    Ok(trial(
        code,
        interference_power,
        noise_variance.max(0.0).sqrt(),
        &mut rng,
    ))
}

/// Error rate of [`mod_channel_decode_trial`] over `trials` uses.
pub fn mod_channel_error_rate(
    code: &LatticeCode,
    interference_power: f64,
    noise_variance: f64,
    trials: u64,
    seed: u64,
    shards: usize,
    exec: Exec,
) -> Result<f64, SimError> {
    code.check_size()?;
    let sizes = shard_sizes(trials, shards);
    let noise_std = noise_variance.max(0.0).sqrt();
    let errors: u64 = exec
        .map(sizes.len(), |s| {
            let mut rng = stream_rng(seed, stream_id(TAG_P2P, 0, s as u64));
            (0..sizes[s])
                .filter(|_| !trial(code, interference_power, noise_std, &mut rng))
                .count() as u64
        })
        .iter()
        .sum();
    Ok(if trials == 0 {
        0.0
    } else {
        errors as f64 / trials as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(q: u32, power: f64) -> LatticeCode {
        LatticeCode::with_power(NestedLatticePair::new(1, q).unwrap(), power, vec![0.37])
    }

    #[test]
    fn noiseless_always_decodes() {
        for seed in 0..200 {
            assert!(mod_channel_decode_trial(&code(16, 1.0), 0.0, 0.0, seed).unwrap());
        }
    }

    #[test]
    fn rate_below_threshold_decodes() {
        // Rate log2 16 = 4 bits at signal-to-noise ratio 2^(2 (4 + 1)).
        let c = code(16, 1024.0);
        let e = mod_channel_error_rate(&c, 0.0, 1.0, 10_000, 1, 4, Exec::Parallel).unwrap();
        assert!(e < 0.05, "{e}");
    }

    #[test]
    fn rate_above_threshold_fails_often() {
        // Signal-to-noise ratio 16 < 2^(2 * 4).
        let c = code(16, 16.0);
        let e = mod_channel_error_rate(&c, 0.0, 1.0, 10_000, 1, 4, Exec::Parallel).unwrap();
        assert!(e > 0.2, "{e}");
    }

    #[test]
    fn interference_hurts() {
        let c = code(8, 256.0);
        let clean = mod_channel_error_rate(&c, 0.0, 1.0, 10_000, 2, 4, Exec::Parallel).unwrap();
        let noisy = mod_channel_error_rate(&c, 8.0, 1.0, 10_000, 2, 4, Exec::Parallel).unwrap();
        assert!(noisy >= clean);
    }

    #[test]
    fn codebook_guard() {
        let c = LatticeCode::with_power(NestedLatticePair::new(4, 100).unwrap(), 1.0, vec![0.0; 4]);
        assert!(matches!(
            mod_channel_decode_trial(&c, 0.0, 1.0, 0),
            Err(SimError::Lattice(LatticeError::CodebookTooLarge { .. }))
        ));
    }

    #[test]
    fn dithered_power_never_exceeds_target() {
        for q in 2..20u32 {
            for &d in &[0.0, 0.13, 0.5, -0.49, 0.77] {
                let c =
                    LatticeCode::with_power(NestedLatticePair::new(1, q).unwrap(), 3.0, vec![d]);
                let p: f64 = c
                    .pair
                    .codebook()
                    .iter()
                    .map(|t| c.transmit(t)[0].powi(2))
                    .sum::<f64>()
                    / q as f64;
                assert!(p <= 3.0 + 1e-12, "q={q} d={d} p={p}");
            }
        }
    }
}
