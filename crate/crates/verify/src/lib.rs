//! Reference values computed directly from the closed forms with plain
//! `f64` arithmetic. Nothing here calls into `mtoi-core`, so agreement with
//! the library is an independent check.

/// `1/2 log2(1 + x)`.
pub fn gaussian_cap(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

/// `(2K-1)((K-1)/2 + (K+1)/2 log2 K) + 1/2 log2 K`.
pub fn f_k(k: usize) -> f64 {
    let kf = k as f64;
    (2.0 * kf - 1.0) * ((kf - 1.0) / 2.0 + (kf + 1.0) / 2.0 * kf.log2()) + 0.5 * kf.log2()
}

/// Unclamped achievable secrecy sum rate. `gains` has `K-1` entries and
/// `powers` has `K`.
pub fn lower_raw(gains: &[f64], powers: &[f64]) -> f64 {
    let k = powers.len();
    let pos = |x: f64| if x > 1.0 { 0.5 * x.log2() } else { 0.0 };
    let direct: f64 = powers.iter().map(|&p| pos(p)).sum();
    let mut strongest = 0;
    let mut weakest = 0;
    for i in 1..gains.len() {
        if gains[i] * powers[i] > gains[strongest] * powers[strongest] {
            strongest = i;
        }
        if gains[i] < gains[weakest] {
            weakest = i;
        }
    }
    let penalty = pos(gains[strongest] * powers[strongest] / gains[weakest].max(1.0));
    direct - penalty - f_k(k)
}

/// Converse bound `sum_i C(P_i) - C(sum_i a_i P_i / ((K-1) c))`.
pub fn upper(gains: &[f64], powers: &[f64]) -> f64 {
    let k = powers.len();
    let c = gains.iter().copied().fold(1.0, f64::max);
    let aligned: f64 = gains.iter().zip(powers).map(|(a, p)| a * p).sum();
    powers.iter().map(|&p| gaussian_cap(p)).sum::<f64>()
        - gaussian_cap(aligned / ((k - 1) as f64 * c))
}

/// Entropy in bits of the sum of `k` independent uniforms on `q`
/// consecutive integers.
pub fn uniform_sum_entropy(q: usize, k: usize) -> f64 {
    let mut dist = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; dist.len() + q - 1];
        for (i, &p) in dist.iter().enumerate() {
            for j in 0..q {
                next[i + j] += p / q as f64;
            }
        }
        dist = next;
    }
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

/// Mutual information between `K-1` uniform codebook points and the real
/// sum of all `K`, for the integer lattice pair `(N, q)`. Coordinates are
/// independent, and given the first `K-1` points the sum is a shift of a
/// uniform, so the leakage is `N (H(sum) - log2 q)`.
pub fn lattice_sum_leakage(q: usize, dim: usize, k: usize) -> f64 {
    dim as f64 * (uniform_sum_entropy(q, k) - (q as f64).log2())
}
