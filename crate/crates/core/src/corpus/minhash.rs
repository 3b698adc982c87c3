use std::collections::HashSet;

use rand::Rng;

use crate::seed;

const MERSENNE_61: u64 = (1 << 61) - 1;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn mod_mersenne(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// Character shingles of `doc`. A document shorter than `size` characters
/// is a single shingle.
pub fn shingles(doc: &str, size: usize) -> HashSet<&str> {
    let bounds: Vec<usize> = doc.char_indices().map(|(i, _)| i).chain([doc.len()]).collect();
    let chars = bounds.len() - 1;
    if chars < size.max(1) {
        return HashSet::from([doc]);
    }
    (0..=chars - size).map(|i| &doc[bounds[i]..bounds[i + size]]).collect()
}

/// Jaccard similarity of two documents' shingle sets.
pub fn exact_jaccard(a: &str, b: &str, size: usize) -> f64 {
    let (sa, sb) = (shingles(a, size), shingles(b, size));
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
    pub shingle_size: usize,
}

impl MinHashSignature {
    /// Fraction of matching components.
    pub fn jaccard(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "signature lengths differ");
        let same = self.values.iter().zip(&other.values).filter(|(a, b)| a == b).count();
        same as f64 / self.values.len() as f64
    }
}

/// `k` universal hash functions `(a x + b) mod (2^61 - 1)` over 64-bit FNV
/// hashes of character shingles.
#[derive(Clone, Debug)]
pub struct MinHasher {
    pub shingle_size: usize,
    coeffs: Vec<(u64, u64)>,
}

impl MinHasher {
    pub fn new(k: usize, shingle_size: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed::derive(seed, "corpus.minhash"));
        let coeffs = (0..k)
            .map(|_| (rng.random_range(1..MERSENNE_61), rng.random_range(0..MERSENNE_61)))
            .collect();
        Self { shingle_size, coeffs }
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn signature(&self, doc: &str) -> MinHashSignature {
        let hashes: Vec<u64> = shingles(doc, self.shingle_size)
            .into_iter()
            .map(|s| fnv1a(s.as_bytes()) % MERSENNE_61)
            .collect();
        let values = self
            .coeffs
            .iter()
            .map(|&(a, b)| {
                hashes
                    .iter()
                    .map(|&x| mod_mersenne(a as u128 * x as u128 + b as u128))
                    .min()
                    .unwrap_or(u64::MAX)
            })
            .collect();
        MinHashSignature {
            values,
            shingle_size: self.shingle_size,
        }
    }
}

pub fn minhash_signature(doc: &str, k: usize, shingle_size: usize, seed: u64) -> MinHashSignature {
    MinHasher::new(k, shingle_size, seed).signature(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mersenne_reduction() {
        for x in [0u128, 1, MERSENNE_61 as u128, (MERSENNE_61 as u128) * 5 + 3, u64::MAX as u128 * u64::MAX as u128] {
            assert_eq!(mod_mersenne(x) as u128, x % MERSENNE_61 as u128);
        }
    }

    #[test]
    fn shingle_cases() {
        assert_eq!(shingles("abc", 5), HashSet::from(["abc"]));
        assert_eq!(shingles("中文分词器", 5).len(), 1);
        assert_eq!(shingles("abcabcab", 3).len(), 3);
    }

    #[test]
    fn identical_and_disjoint() {
        let h = MinHasher::new(64, 5, 1);
        let a = h.signature("今天天气很好我们出去玩吧");
        assert_eq!(a.jaccard(&h.signature("今天天气很好我们出去玩吧")), 1.0);
        assert_eq!(a.jaccard(&h.signature("abcdefghijklmnop")), 0.0);
        assert_eq!(a.values.len(), 64);
    }
}
