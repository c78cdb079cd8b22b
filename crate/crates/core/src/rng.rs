//! Seeded random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` pair, so the
//! output of a record, batch or epoch does not depend on what was drawn
//! before it. ChaCha20 is counter based and platform independent.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::qcore::C64;

pub type Rng = ChaCha20Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with E|z|² = 1.
pub fn complex_normal(rng: &mut Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(normal(rng) * s, normal(rng) * s)
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform index in `0..n`.
pub fn index(rng: &mut Rng, n: usize) -> usize {
    rng.random_range(0..n)
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Up to `k` distinct unordered index pairs `(i, j)`, `i < j < n`, drawn
/// uniformly without replacement. Returns all `n(n−1)/2` pairs (shuffled)
/// when `k` exceeds that count.
pub fn distinct_pairs(rng: &mut Rng, n: usize, k: usize) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    if total == 0 || k == 0 {
        return Vec::new();
    }
    if k.saturating_mul(4) >= total {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        shuffle(rng, &mut all);
        all.truncate(k);
        return all;
    }
    let mut seen = std::collections::HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let a = index(rng, n);
        let b = index(rng, n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if seen.insert(pair) {
            out.push(pair);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..4).map(|_| normal(&mut stream(7, 1))).collect();
        let b: Vec<f64> = (0..4).map(|_| normal(&mut stream(7, 1))).collect();
        assert_eq!(a, b);
        let mut s1 = stream(7, 1);
        let mut s2 = stream(7, 2);
        assert_ne!(normal(&mut s1), normal(&mut s2));
    }

    #[test]
    fn pairs_are_distinct_and_capped() {
        let mut r = stream(3, 0);
        let p = distinct_pairs(&mut r, 5, 10);
        assert_eq!(p.len(), 10);
        let p = distinct_pairs(&mut r, 5, 50);
        assert_eq!(p.len(), 10);
        let big = distinct_pairs(&mut r, 1000, 500);
        let set: std::collections::HashSet<_> = big.iter().collect();
        assert_eq!(set.len(), 500);
        assert!(big.iter().all(|&(i, j)| i < j && j < 1000));
        assert!(distinct_pairs(&mut r, 1, 5).is_empty());
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<usize> = (0..50).collect();
        shuffle(&mut stream(1, 0), &mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
