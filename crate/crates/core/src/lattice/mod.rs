//! Integer nested lattice pairs.
//!
//! The fine lattice is `Z^N` and the coarse lattice is `q Z^N`. Coset
//! representatives live in the centered half-open cube `(-q/2, q/2]^N`, so the
//! codebook is the `q^N` integer points of that cube and is a group under
//! coordinatewise addition followed by [`NestedLatticePair::mod_coarse`].

mod carry;
mod leakage;
mod wrap;

pub use carry::{
    carry_reconstruct, exhaustive_carry_check, unpack_carry_index, CarryIndex, CarryScan,
};
pub use leakage::{exact_leakage, LeakageReport, Observation, RationalDithers, DEFAULT_MAX_STATES};
pub use wrap::{wrap_probability, WrapEstimate};

use serde::Serialize;
use thiserror::Error;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    InvalidDimension(usize),
    #[error("nesting ratio {0} must be at least 2")]
    InvalidNesting(u32),
    #[error("point {0:?} is not a codebook point")]
    PointNotInCodebook(Vec<i64>),
    #[error("vector has {found} coordinates, lattice dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{states} states exceed the enumeration limit {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },
    #[error("codebook has {size} points, limit {limit}")]
    CodebookTooLarge { size: u128, limit: u128 },
    #[error("need at least {min} users, got {found}")]
    TooFewUsers { min: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Fine lattice `Z^N` nested in coarse lattice `q Z^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NestedLatticePair {
    dim: usize,
    q: u32,
}

/// Reduces an integer into `(-m/2, m/2]`.
pub fn mod_centered_int(v: i64, m: i64) -> i64 {
    let r = v.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

/// Reduces a real into `(-m/2, m/2]`.
pub fn mod_centered(x: f64, m: f64) -> f64 {
    let r = x - m * ((x - m / 2.0) / m).ceil();
    // Rounding can land exactly on -m/2; that point belongs to +m/2.
    if r <= -m / 2.0 {
        r + m
    } else {
        r
    }
}

impl NestedLatticePair {
    pub fn new(dim: usize, q: u32) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::InvalidDimension(dim));
        }
        if q < 2 {
            return Err(LatticeError::InvalidNesting(q));
        }
        Ok(NestedLatticePair { dim, q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// `q^N`.
    pub fn codebook_size(&self) -> u128 {
        (self.q as u128).pow(self.dim as u32)
    }

    /// Rate per dimension, `log2 q` bits.
    pub fn rate(&self) -> f64 {
        (self.q as f64).log2()
    }

    /// Second moment per dimension of the coarse fundamental region,
    /// `q^2 / 12`.
    pub fn coarse_second_moment(&self) -> f64 {
        let q = self.q as f64;
        q * q / 12.0
    }

    /// Worst-case per-dimension power of a dithered codebook, `(q^2 + 2) / 12`.
    /// Any fixed dither leaves the mean square at or below this.
    pub fn max_dithered_power(&self) -> f64 {
        let q = self.q as f64;
        (q * q + 2.0) / 12.0
    }

    /// Centered representative of digit `d` in `0..q`.
    fn digit_to_rep(&self, d: u32) -> i64 {
        mod_centered_int(d as i64, self.q as i64)
    }

    /// Codebook point number `index`, `index < q^N`. Coordinate 0 is the
    /// most significant digit.
    pub fn point(&self, index: u64) -> Vec<i64> {
        let q = self.q as u64;
        let mut digits = vec![0i64; self.dim];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = self.digit_to_rep((rest % q) as u32);
            rest /= q;
        }
        digits
    }

    /// Inverse of [`NestedLatticePair::point`].
    pub fn index_of(&self, point: &[i64]) -> u64 {
        let q = self.q as i64;
        point
            .iter()
            .fold(0u64, |acc, &c| acc * q as u64 + c.rem_euclid(q) as u64)
    }

    pub fn codebook(&self) -> Vec<Vec<i64>> {
        (0..self.codebook_size() as u64)
            .map(|i| self.point(i))
            .collect()
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        point.len() == self.dim
            && point
                .iter()
                .all(|&c| mod_centered_int(c, self.q as i64) == c)
    }

    /// `x - Q_coarse(x)`, the representative in `(-q/2, q/2]^N`.
    pub fn mod_coarse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| mod_centered(v, self.q as f64)).collect()
    }

    pub fn mod_coarse_int(&self, x: &[i64]) -> Vec<i64> {
        x.iter()
            .map(|&v| mod_centered_int(v, self.q as i64))
            .collect()
    }

    /// Group operation on the codebook.
    pub fn add(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| mod_centered_int(x + y, self.q as i64))
            .collect()
    }

    /// Nearest fine point reduced modulo the coarse lattice. For `Z^N`
    /// coordinatewise rounding is the exact Euclidean quantizer.
    pub fn decode_nearest(&self, y: &[f64]) -> Vec<i64> {
        y.iter()
            .map(|&v| mod_centered_int(v.round() as i64, self.q as i64))
            .collect()
    }

    /// `x = (t + d) mod coarse`.
    pub fn encode(&self, t: &[i64], dither: &[f64]) -> Result<DitheredWord, LatticeError> {
        if dither.len() != self.dim {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim,
                found: dither.len(),
            });
        }
        if !self.contains(t) {
            return Err(LatticeError::PointNotInCodebook(t.to_vec()));
        }
        let shifted: Vec<f64> = t.iter().zip(dither).map(|(&a, &d)| a as f64 + d).collect();
        Ok(DitheredWord {
            t: t.to_vec(),
            dither: dither.to_vec(),
            x: self.mod_coarse(&shifted),
        })
    }

    /// Recovers `t` from `x` when the dither is known.
    pub fn decode_with_dither(&self, x: &[f64], dither: &[f64]) -> Vec<i64> {
        let y: Vec<f64> = x.iter().zip(dither).map(|(a, d)| a - d).collect();
        self.decode_nearest(&y)
    }
}

/// A codebook point, its dither and the transmitted representative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DitheredWord {
    pub t: Vec<i64>,
    pub dither: Vec<f64>,
    pub x: Vec<f64>,
}
