//! Exact information leakage of an aligned lattice sum.
//!
//! Users `1..K` draw independent uniform codebook points `t_k` and send
//! `x_k = (t_k + d_k) mod coarse` with fixed, publicly known dithers. The
//! eavesdropper sees `sum_k x_k`. The leakage is the mutual information
//! between `(t_1, ..., t_{K-1})` and that sum, computed by enumerating every
//! tuple. Dithers are rationals `j / D` so all arithmetic is exact in units
//! of `1 / D`.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::{mod_centered_int, LatticeError, NestedLatticePair};
use crate::exec::Exec;
use crate::rng::SimRng;

pub const DEFAULT_MAX_STATES: u128 = 10_000_000;

/// Dithers `numerators[k][i] / denominator`, each inside the coarse cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalDithers {
    pub denominator: i64,
    pub numerators: Vec<Vec<i64>>,
}

impl RationalDithers {
    pub fn zero(pair: &NestedLatticePair, k: usize) -> Self {
        RationalDithers {
            denominator: 1,
            numerators: vec![vec![0; pair.dim()]; k],
        }
    }

    /// Uniform draws from the grid `(1/D) Z^N` inside `(-q/2, q/2]^N`.
    pub fn random(pair: &NestedLatticePair, k: usize, grid: i64, rng: &mut SimRng) -> Self {
        let m = pair.q() as i64 * grid;
        let numerators = (0..k)
            .map(|_| {
                (0..pair.dim())
                    .map(|_| mod_centered_int(rng.random_range(0..m), m))
                    .collect()
            })
            .collect();
        RationalDithers {
            denominator: grid,
            numerators,
        }
    }

    pub fn as_f64(&self) -> Vec<Vec<f64>> {
        self.numerators
            .iter()
            .map(|d| {
                d.iter()
                    .map(|&j| j as f64 / self.denominator as f64)
                    .collect()
            })
            .collect()
    }
}

/// What the eavesdropper is assumed to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    /// The real sum `sum_k x_k`.
    Sum,
    /// The sum reduced modulo the coarse lattice.
    ModSum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub leakage_bits: f64,
    /// `N log2 K`.
    pub bound_bits: f64,
    pub states: u64,
}

/// Exact `I(t_1..t_{K-1}; observation)` in bits.
pub fn exact_leakage(
    pair: &NestedLatticePair,
    k: usize,
    dithers: &RationalDithers,
    observation: Observation,
    max_states: u128,
    exec: Exec,
) -> Result<LeakageReport, LatticeError> {
    if k < 2 {
        return Err(LatticeError::TooFewUsers { min: 2, found: k });
    }
    if dithers.numerators.len() != k
        || dithers.numerators.iter().any(|d| d.len() != pair.dim())
        || dithers.denominator < 1
    {
        return Err(LatticeError::InvalidArgument(format!(
            "need {k} dithers of dimension {} with a positive denominator",
            pair.dim()
        )));
    }
    let cb = pair.codebook_size();
    let states = cb.checked_pow(k as u32).unwrap_or(u128::MAX);
    if states > max_states {
        return Err(LatticeError::StateSpaceTooLarge {
            states,
            limit: max_states,
        });
    }
    let cb = cb as u64;
    let dim = pair.dim();
    let den = dithers.denominator;
    let modulus = pair.q() as i64 * den;

    // words[k][i]: scaled transmitted point of user k for codebook index i.
    let words: Vec<Vec<Vec<i64>>> = dithers
        .numerators
        .iter()
        .map(|d| {
            (0..cb)
                .map(|i| {
                    pair.point(i)
                        .iter()
                        .zip(d)
                        .map(|(&t, &j)| mod_centered_int(t * den + j, modulus))
                        .collect()
                })
                .collect()
        })
        .collect();

    // Key packing: each coordinate of the observation is offset into
    // 0..span.
    let half = k as i64 * modulus;
    let span = (2 * half + 1) as u128;
    let key = |y: &[i64]| -> u128 {
        y.iter().fold(0u128, |acc, &c| {
            let c = match observation {
                Observation::Sum => c,
                Observation::ModSum => mod_centered_int(c, modulus),
            };
            acc * span + (c + half) as u128
        })
    };

    let prefixes = cb.pow(k as u32 - 1);
    let last = &words[k - 1];
    let prefix_sum = |p: u64| -> Vec<i64> {
        let mut s = vec![0i64; dim];
        let mut rem = p;
        for w in &words[..k - 1] {
            let i = (rem % cb) as usize;
            rem /= cb;
            for (a, b) in s.iter_mut().zip(&w[i]) {
                *a += b;
            }
        }
        s
    };
    let keys_for = |p: u64| -> Vec<u128> {
        let s = prefix_sum(p);
        let mut y = vec![0i64; dim];
        let mut keys: Vec<u128> = last
            .iter()
            .map(|x| {
                for ((out, a), b) in y.iter_mut().zip(&s).zip(x) {
                    *out = a + b;
                }
                key(&y)
            })
            .collect();
        keys.sort_unstable();
        keys
    };

    let chunks = chunk_ranges(prefixes, 256);

    // Marginal counts of the observation. Integer counts, so merge order is
    // irrelevant.
    let partial: Vec<HashMap<u128, u64>> = exec.map(chunks.len(), |c| {
        let mut h = HashMap::new();
        for p in chunks[c].clone() {
            for y in keys_for(p) {
                *h.entry(y).or_insert(0) += 1;
            }
        }
        h
    });
    let mut marginal: HashMap<u128, u64> = HashMap::new();
    for h in partial {
        for (y, n) in h {
            *marginal.entry(y).or_insert(0) += n;
        }
    }

    // I = sum_{p,y} c(p,y)/n log2(c(p,y) n / (c(p) c(y))), c(p) = q^N.
    let total = states as f64;
    let per_prefix = cb as f64;
    let sums: Vec<f64> = exec.map(chunks.len(), |c| {
        let mut acc = 0.0;
        for p in chunks[c].clone() {
            let keys = keys_for(p);
            let mut i = 0;
            while i < keys.len() {
                let mut j = i;
                while j < keys.len() && keys[j] == keys[i] {
                    j += 1;
                }
                let joint = (j - i) as f64;
                let my = marginal[&keys[i]] as f64;
                acc += joint / total * (joint * total / (per_prefix * my)).log2();
                i = j;
            }
        }
        acc
    });

    Ok(LeakageReport {
        leakage_bits: sums.iter().sum(),
        bound_bits: dim as f64 * (k as f64).log2(),
        states: states as u64,
    })
}

fn chunk_ranges(n: u64, target: u64) -> Vec<std::ops::Range<u64>> {
    let size = n.div_ceil(target).max(1);
    (0..n.div_ceil(size))
        .map(|c| c * size..((c + 1) * size).min(n))
        .collect()
}
