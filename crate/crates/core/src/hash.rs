//! Counter-based hashing.
//!
//! Every random quantity that must be addressable out of order (edge weights,
//! per-replicate seeds) is derived by hashing a key with a master seed rather
//! than by drawing from a sequential stream. The same key always yields the
//! same value, independent of query order, thread count or platform.

/// SplitMix64 finalizer (Stafford's mix13 constants).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Hash a sequence of words under `seed`.
#[inline]
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for (i, &w) in words.iter().enumerate() {
        h = mix64(h ^ w.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
    }
    mix64(h ^ words.len() as u64)
}

/// Map a hash to the open interval (0, 1) with 52 bits of resolution.
#[inline]
pub fn unit_open(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Seed for a sub-task (replicate, scale rung, ...) of a run.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    hash_words(master, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_open_stays_inside() {
        assert!(unit_open(0) > 0.0);
        assert!(unit_open(u64::MAX) < 1.0);
    }

    #[test]
    fn word_order_matters() {
        assert_ne!(hash_words(7, &[1, 2]), hash_words(7, &[2, 1]));
        assert_ne!(hash_words(7, &[1]), hash_words(7, &[1, 0]));
        assert_eq!(hash_words(7, &[1, 2]), hash_words(7, &[1, 2]));
    }

    #[test]
    fn roughly_uniform() {
        let n = 100_000;
        let mean: f64 = (0..n).map(|i| unit_open(hash_words(3, &[i]))).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }
}
