//! Carry index of a sum of codebook points.
//!
//! Points are taken as coset representatives in `[0, q)^N`. The sum of `K`
//! such points, coordinate by coordinate, equals its reduction modulo `q`
//! plus `q` times a carry in `0..K`. Packing the `N` carries base `K` (first
//! coordinate most significant) and adding 1 gives `T` in `1..=K^N`.
//!
//! The `[0, q)^N` region matters: with the centered region a coordinate sum
//! can need `K + 1` distinct carries.

use serde::Serialize;

use super::{LatticeError, NestedLatticePair};
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarryIndex {
    /// Packed index, `1 <= index <= K^N`.
    pub index: u64,
    /// Per-coordinate carries in `0..K`.
    pub carries: Vec<u32>,
}

/// Computes the carry index of `points` and rebuilds their sum from
/// `(T, sum mod q)`. The returned sum is over `[0, q)` representatives.
pub fn carry_reconstruct(
    points: &[Vec<i64>],
    pair: &NestedLatticePair,
) -> Result<(CarryIndex, Vec<i64>), LatticeError> {
    let k = points.len();
    if k < 2 {
        return Err(LatticeError::TooFewUsers { min: 2, found: k });
    }
    let q = pair.q() as i64;
    let dim = pair.dim();
    let mut sum = vec![0i64; dim];
    for p in points {
        if p.len() != dim {
            return Err(LatticeError::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        for (s, c) in sum.iter_mut().zip(p) {
            *s += c.rem_euclid(q);
        }
    }
    let residue: Vec<i64> = sum.iter().map(|s| s.rem_euclid(q)).collect();
    let carries: Vec<u32> = sum
        .iter()
        .zip(&residue)
        .map(|(s, r)| ((s - r) / q) as u32)
        .collect();
    let index = 1 + carries
        .iter()
        .fold(0u64, |acc, &c| acc * k as u64 + c as u64);
    let unpacked = unpack_carry_index(index, k, dim);
    let rebuilt: Vec<i64> = residue
        .iter()
        .zip(&unpacked)
        .map(|(r, c)| r + q * *c as i64)
        .collect();
    debug_assert_eq!(rebuilt, sum);
    Ok((CarryIndex { index, carries }, rebuilt))
}

/// Inverse of the carry packing.
pub fn unpack_carry_index(index: u64, k: usize, dim: usize) -> Vec<u32> {
    let mut rest = index - 1;
    let mut carries = vec![0u32; dim];
    for slot in carries.iter_mut().rev() {
        *slot = (rest % k as u64) as u32;
        rest /= k as u64;
    }
    carries
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarryScan {
    pub tuples: u64,
    /// Tuples whose sum was rebuilt exactly.
    pub exact: u64,
    pub t_max: u64,
    pub t_bound: u64,
}

/// Runs [`carry_reconstruct`] on all `q^{NK}` tuples.
pub fn exhaustive_carry_check(
    pair: &NestedLatticePair,
    k: usize,
    max_states: u128,
    exec: Exec,
) -> Result<CarryScan, LatticeError> {
    if k < 2 {
        return Err(LatticeError::TooFewUsers { min: 2, found: k });
    }
    let cb = pair.codebook_size();
    let states = cb.checked_pow(k as u32).unwrap_or(u128::MAX);
    if states > max_states {
        return Err(LatticeError::StateSpaceTooLarge {
            states,
            limit: max_states,
        });
    }
    let codebook = pair.codebook();
    let cb = cb as u64;
    // Leading user fixed per work item, the rest enumerated inside.
    let rest = cb.pow(k as u32 - 1);
    let parts = exec.map(cb as usize, |lead| {
        let mut exact = 0u64;
        let mut t_max = 0u64;
        let mut tuple = vec![codebook[lead].clone(); k];
        for r in 0..rest {
            let mut rem = r;
            for slot in tuple[1..].iter_mut() {
                *slot = codebook[(rem % cb) as usize].clone();
                rem /= cb;
            }
            let (ci, rebuilt) = carry_reconstruct(&tuple, pair).expect("dimensions match");
            let direct: Vec<i64> = (0..pair.dim())
                .map(|d| tuple.iter().map(|p| p[d].rem_euclid(pair.q() as i64)).sum())
                .collect();
            if rebuilt == direct {
                exact += 1;
            }
            t_max = t_max.max(ci.index);
        }
        (exact, t_max)
    });
    Ok(CarryScan {
        tuples: states as u64,
        exact: parts.iter().map(|p| p.0).sum(),
        t_max: parts.iter().map(|p| p.1).max().unwrap_or(0),
        t_bound: (k as u64).pow(pair.dim() as u32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_carry() {
        let pair = NestedLatticePair::new(2, 5).unwrap();
        // [0, q) rows (4,3), (4,4), (2,0) in centered form.
        let pts = vec![vec![-1, -2], vec![-1, -1], vec![2, 0]];
        let (ci, sum) = carry_reconstruct(&pts, &pair).unwrap();
        assert_eq!(sum, vec![10, 7]);
        assert_eq!(ci.carries, vec![2, 1]);
        assert_eq!(ci.index, 8);
        assert!(ci.index <= 9);
    }

    #[test]
    fn zero_points() {
        let pair = NestedLatticePair::new(3, 4).unwrap();
        let (ci, sum) = carry_reconstruct(&vec![vec![0; 3]; 4], &pair).unwrap();
        assert_eq!(ci.index, 1);
        assert_eq!(ci.carries, vec![0, 0, 0]);
        assert_eq!(sum, vec![0, 0, 0]);
    }

    #[test]
    fn single_point_rejected() {
        let pair = NestedLatticePair::new(1, 4).unwrap();
        assert!(carry_reconstruct(&[vec![1]], &pair).is_err());
    }

    #[test]
    fn exhaustive_small_cases() {
        for q in 3..=5u32 {
            let pair = NestedLatticePair::new(1, q).unwrap();
            let scan = exhaustive_carry_check(&pair, 3, 1 << 20, Exec::Parallel).unwrap();
            assert_eq!(scan.exact, scan.tuples);
            assert_eq!(scan.t_max, 3);
        }
        let pair = NestedLatticePair::new(2, 3).unwrap();
        let scan = exhaustive_carry_check(&pair, 3, 1 << 20, Exec::Sequential).unwrap();
        assert_eq!(scan.tuples, 729);
        assert_eq!(scan.exact, 729);
        assert!(scan.t_max <= 9);
    }

    #[test]
    fn centered_region_needs_extra_carry() {
        // q = 4, K = 2: centered sums span -2..=4, which needs 3 carries.
        let sums: Vec<i64> = (-1..=2)
            .flat_map(|a| (-1..=2).map(move |b| a + b))
            .collect();
        let carries: std::collections::BTreeSet<i64> = sums
            .iter()
            .map(|s| (s - super::super::mod_centered_int(*s, 4)) / 4)
            .collect();
        assert_eq!(carries.len(), 3);
    }
}
