//! MinHash signatures over character shingles.
//!
//! Each shingle is hashed once with xxh3 and then pushed through `k`
//! universal hash functions `(a·x + b) mod (2^61 − 1)` drawn from a seeded
//! ChaCha stream, which stand in for random permutations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxhash_rust::xxh3::xxh3_64;

pub const DEFAULT_SHINGLE: usize = 5;
pub const DEFAULT_PERMUTATIONS: usize = 64;
pub const DEFAULT_SEED: u64 = 0x6c65_7361_6e00_0001;

const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<u64>);

impl Signature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matches(&self, other: &Signature) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a == b).count()
    }

    /// Fraction of agreeing slots.
    pub fn jaccard(&self, other: &Signature) -> f64 {
        if self.0.is_empty() || self.0.len() != other.0.len() {
            return 0.0;
        }
        self.matches(other) as f64 / self.0.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct MinHasher {
    shingle: usize,
    coefficients: Vec<(u64, u64)>,
}

impl Default for MinHasher {
    fn default() -> Self {
        Self::new(DEFAULT_PERMUTATIONS, DEFAULT_SHINGLE, DEFAULT_SEED)
    }
}

impl MinHasher {
    pub fn new(permutations: usize, shingle: usize, seed: u64) -> Self {
        assert!(permutations > 0 && shingle > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..permutations)
            .map(|_| (rng.random_range(1..MERSENNE_61), rng.random_range(0..MERSENNE_61)))
            .collect();
        Self { shingle, coefficients }
    }

    pub fn permutations(&self) -> usize {
        self.coefficients.len()
    }

    pub fn shingle_size(&self) -> usize {
        self.shingle
    }

    /// `None` for texts shorter than one shingle.
    pub fn signature(&self, text: &str) -> Option<Signature> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() < self.shingle {
            return None;
        }
        let mut mins = vec![u64::MAX; self.coefficients.len()];
        let mut buf = String::new();
        for window in chars.windows(self.shingle) {
            buf.clear();
            buf.extend(window);
            let x = xxh3_64(buf.as_bytes()) % MERSENNE_61;
            for (slot, &(a, b)) in mins.iter_mut().zip(&self.coefficients) {
                let h = ((a as u128 * x as u128 + b as u128) % MERSENNE_61 as u128) as u64;
                if h < *slot {
                    *slot = h;
                }
            }
        }
        Some(Signature(mins))
    }
}
