mod common;

use std::collections::BTreeSet;

use common::{brute_dedup, jaccard, planted_fixture, random_text, rng, shingle_set};
use modernzh_core::corpus::{dedup, minhash_signature, DedupConfig, MixtureSampler, REFERENCE_MIXTURE};
use rand::Rng;

#[test]
fn dedup_matches_all_pairs_oracle_on_planted_fixture() {
    let (docs, planted) = planted_fixture(77);
    let cfg = DedupConfig::default();
    let oracle = brute_dedup(&docs, cfg.threshold, cfg.shingle_size);
    assert_eq!(oracle, planted, "fixture should only contain the planted pairs");

    let out = dedup(&docs, &cfg, 5).unwrap();
    let dropped: BTreeSet<usize> = out.dropped.iter().map(|d| d.index).collect();
    let tp = dropped.intersection(&oracle).count() as f64;
    let precision = tp / dropped.len() as f64;
    let recall = tp / oracle.len() as f64;
    assert_eq!((precision, recall), (1.0, 1.0));
    for d in &out.dropped {
        assert!(d.duplicate_of < d.index);
        assert!(!planted.contains(&d.duplicate_of), "a first occurrence was used up");
    }
    let kept: BTreeSet<usize> = out.kept.iter().copied().collect();
    assert!((0..docs.len()).filter(|i| !planted.contains(i)).all(|i| kept.contains(&i)));
}

#[test]
fn planted_pairs_sit_near_ninety_percent() {
    let (docs, planted) = planted_fixture(77);
    for &i in &planted {
        let a = shingle_set(&docs[i], 5);
        let best = (0..i)
            .map(|j| jaccard(&a, &shingle_set(&docs[j], 5)))
            .fold(0.0, f64::max);
        assert!((0.85..=0.95).contains(&best), "doc {i}: {best}");
    }
}

fn half_overlap_pair(seed: u64) -> (String, String) {
    let mut r = rng(seed);
    let common = random_text(&mut r, 200);
    // 196 shared shingles, 98 private on each side.
    let a = format!("{common}{}", random_text(&mut r, 98));
    let b = format!("{}{common}", random_text(&mut r, 98));
    (a, b)
}

#[test]
fn minhash_estimates_half_overlap() {
    let (a, b) = half_overlap_pair(1);
    let exact = jaccard(&shingle_set(&a, 5), &shingle_set(&b, 5));
    assert!((exact - 0.5).abs() < 0.01, "{exact}");
    let est = minhash_signature(&a, 256, 5, 9).jaccard(&minhash_signature(&b, 256, 5, 9));
    assert!((est - exact).abs() <= 0.1, "estimate {est}, exact {exact}");
}

#[test]
fn minhash_estimate_is_unbiased() {
    let (a, b) = half_overlap_pair(2);
    let exact = jaccard(&shingle_set(&a, 5), &shingle_set(&b, 5));
    let trials = 400;
    let mean = (0..trials)
        .map(|s| minhash_signature(&a, 128, 5, s).jaccard(&minhash_signature(&b, 128, 5, s)))
        .sum::<f64>()
        / trials as f64;
    // Standard error is about 0.044 / 20.
    assert!((mean - exact).abs() < 0.01, "mean {mean}, exact {exact}");
}

fn lengths(r: &mut impl Rng, docs: usize, mean: usize) -> Vec<usize> {
    (0..docs).map(|_| r.random_range(mean / 2..=mean * 3 / 2)).collect()
}

fn token_shares(s: &MixtureSampler, steps: u64) -> Vec<f64> {
    let mut tokens = vec![0usize; s.source_probabilities().len()];
    for step in 0..steps {
        for d in s.sample(1, 3, step) {
            tokens[d.source] += s.length(d);
        }
    }
    let total: usize = tokens.iter().sum();
    tokens.iter().map(|&t| t as f64 / total as f64).collect()
}

#[test]
fn two_source_shares_converge() {
    let mut r = rng(4);
    let s = MixtureSampler::new(&[0.5, 0.5], vec![lengths(&mut r, 50, 100), lengths(&mut r, 80, 700)]).unwrap();
    for share in token_shares(&s, 100_000) {
        assert!((share - 0.5).abs() <= 0.01, "{share}");
    }
}

#[test]
fn reference_mixture_shares_converge() {
    let mut r = rng(5);
    let means = [160, 400, 300, 300, 2400];
    let lens = means.iter().map(|&m| lengths(&mut r, 60, m)).collect();
    let ratios: Vec<f64> = REFERENCE_MIXTURE.iter().map(|(_, x)| *x).collect();
    let s = MixtureSampler::new(&ratios, lens).unwrap();
    for (share, want) in token_shares(&s, 100_000).iter().zip(&ratios) {
        assert!((share - want).abs() <= 0.01, "{share} vs {want}");
    }
}
