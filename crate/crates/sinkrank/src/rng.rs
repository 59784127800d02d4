//! Deterministic random streams.
//!
//! Everything stochastic in this crate (synthetic data, pseudo-test
//! sampling, the randomization test) draws from ChaCha8 streams keyed by
//! a user seed plus purpose tags. ChaCha is a counter-based generator
//! with a stable output sequence, so identical seeds give bit-identical
//! results across runs, thread counts, and platforms. Bounded integers
//! use Lemire's multiply-shift rejection and normals use the Box-Muller
//! transform, both implemented here so the streams do not depend on the
//! internals of any distribution library.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Purpose tags keeping unrelated streams disjoint under one user seed.
pub mod tag {
    pub const SYNTH_MATCHING: u64 = 1;
    pub const SYNTH_HUBS: u64 = 2;
    pub const SYNTH_NOISE: u64 = 3;
    pub const PSEUDO_SAMPLE: u64 = 4;
    pub const QUERY: u64 = 5;
    pub const SIGNIFICANCE: u64 = 6;
    pub const POOL_STAGE: u64 = 7;
}

/// SplitMix64 finalizer. Bijective on u64, used only for key derivation.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a base seed and a sequence of tags.
///
/// The derivation is fixed: changing it would change every seeded output
/// of the crate, so it is covered by regression tests.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut h = mix(seed);
    for &t in tags {
        h = mix(h ^ mix(t));
    }
    h
}

/// A ChaCha8 stream keyed by (seed, tags).
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}

/// Uniform draw from `[0, n)` without modulo bias (Lemire's method).
pub fn uniform_below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    assert!(n > 0, "uniform_below requires n > 0");
    let mut x = rng.next_u64();
    let mut m = (x as u128) * (n as u128);
    let mut lo = m as u64;
    if lo < n {
        let threshold = n.wrapping_neg() % n;
        while lo < threshold {
            x = rng.next_u64();
            m = (x as u128) * (n as u128);
            lo = m as u64;
        }
    }
    (m >> 64) as u64
}

/// Sample `k` distinct indices from `0..n`, uniformly, via a partial
/// Fisher-Yates shuffle. Order of the returned indices is the shuffle
/// order (itself uniform over arrangements).
pub fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot sample {k} from {n} without replacement");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Uniform f64 in the half-open interval (0, 1], from the top 53 bits.
fn unit_positive(rng: &mut ChaCha8Rng) -> f64 {
    // (x >> 11) is in [0, 2^53); +1 shifts to (0, 2^53] so log() is safe.
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal stream via the Box-Muller transform.
///
/// Each pair of uniforms yields two normals; the second is cached. The
/// sequence is fully determined by the underlying ChaCha stream.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = unit_positive(&mut self.rng);
        let u2 = unit_positive(&mut self.rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_stable_and_tag_sensitive() {
        assert_eq!(derive(7, &[tag::SYNTH_NOISE]), derive(7, &[tag::SYNTH_NOISE]));
        assert_ne!(derive(7, &[tag::SYNTH_NOISE]), derive(7, &[tag::SYNTH_HUBS]));
        assert_ne!(derive(7, &[1, 2]), derive(7, &[2, 1]));
        assert_ne!(derive(7, &[]), derive(8, &[]));
    }

    #[test]
    fn uniform_below_in_range_and_hits_all_values() {
        let mut rng = stream(1, &[]);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            let v = uniform_below(&mut rng, 5);
            assert!(v < 5);
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sample_without_replacement_is_distinct_and_uniformish() {
        let mut rng = stream(2, &[]);
        let s = sample_without_replacement(&mut rng, 100, 30);
        assert_eq!(s.len(), 30);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 30);
        assert!(sorted.iter().all(|&i| i < 100));

        // exhaustive k == n is a permutation
        let mut rng = stream(2, &[]);
        let mut p = sample_without_replacement(&mut rng, 10, 10);
        p.sort_unstable();
        assert_eq!(p, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn normal_stream_moments() {
        let mut ns = NormalStream::new(stream(3, &[]));
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let z = ns.sample();
            assert!(z.is_finite());
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    /// Frozen outputs of the derivation chain and generator. These are
    /// part of the external reproducibility contract (seeded artifacts
    /// must be bit-identical across versions and platforms); changing
    /// any of them is a breaking change.
    #[test]
    fn value_stability_regression() {
        assert_eq!(derive(7, &[]), 0x63cb_e1e4_5932_0dd7);
        assert_eq!(derive(7, &[tag::SYNTH_NOISE]), 0xab84_2222_742f_f283);
        assert_eq!(derive(42, &[tag::QUERY, 3]), 0xbe21_cab7_87ea_1277);
        let mut rng = stream(7, &[]);
        assert_eq!(rng.next_u64(), 0x0954_1471_6a91_0b46);
        let mut ns = NormalStream::new(stream(7, &[tag::SYNTH_NOISE]));
        assert_eq!(ns.sample().to_bits(), 0xbfae_f22e_54ed_dab5);
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = stream(42, &[tag::PSEUDO_SAMPLE, 3]);
        let mut b = stream(42, &[tag::PSEUDO_SAMPLE, 3]);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
