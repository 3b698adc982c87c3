mod common;

use modernzh_core::benchkit::{cosine, embed, sts_score, throughput, BenchBucket, BenchConfig, Pooling, StsPair};
use modernzh_core::encoder::{Checkpoint, EncoderConfig, LayerKind};
use modernzh_core::toy::{toy_encoder_config, toy_setup};

fn model(radius: usize) -> Checkpoint {
    let cfg = EncoderConfig {
        layers: 3,
        hidden: 8,
        heads: 2,
        intermediate: Some(8),
        global_layer_interval: 3,
        local_window_radius: radius,
        max_context: 512,
        vocab_size: 16,
        ..EncoderConfig::default()
    };
    Checkpoint::init(cfg, 0).unwrap()
}

fn counts(ck: &Checkpoint, seq_len: usize, batch: usize) -> (u64, u64) {
    let cfg = BenchConfig {
        runs: 3,
        warmup: 0,
        ..BenchConfig::default()
    };
    let r = throughput(ck, BenchBucket { seq_len, batch }, &cfg).unwrap();
    assert_eq!(r.analytic_counts, r.instrumented_counts);
    (r.total_score_count(LayerKind::Global), r.total_score_count(LayerKind::Local))
}

#[test]
fn counts_match_brute_pair_enumeration() {
    for radius in [1, 4, 16] {
        let ck = model(radius);
        for (len, batch) in [(7, 1), (33, 2), (128, 3)] {
            let (g, l) = counts(&ck, len, batch);
            let b = batch as u64;
            assert_eq!(g, b * common::count_pairs(len, true, radius));
            assert_eq!(l, 2 * b * common::count_pairs(len, false, radius));
        }
    }
}

#[test]
fn doubling_length_scales_global_by_four_local_by_two() {
    let radius = 8;
    let ck = model(radius);
    for len in [64, 128, 256] {
        let (g1, l1) = counts(&ck, len, 1);
        let (g2, l2) = counts(&ck, 2 * len, 1);
        assert_eq!(g2, 4 * g1);
        // Each local layer drops r(r+1) pairs at the two sequence ends,
        // independent of length.
        let edge = 2 * (radius * (radius + 1)) as u64;
        assert_eq!(l2 + edge, 2 * (l1 + edge));
    }
}

#[test]
fn identical_texts_have_unit_cosine() {
    let s = toy_setup(7, 10).unwrap();
    let ck = Checkpoint::init(toy_encoder_config(s.tokenizer.vocab_size()), 11).unwrap();
    let text = &s.heldout[0][..s.heldout[0].char_indices().nth(60).unwrap().0];
    for pooling in [Pooling::Mean, Pooling::Cls] {
        let e = embed(&ck, &s.tokenizer, &[text, text], pooling).unwrap();
        assert!((cosine(&e[0], &e[1]) - 1.0).abs() < 1e-12);
    }
    let pairs = vec![
        StsPair { a: text.into(), b: text.into(), gold: 5.0 },
        StsPair { a: text.into(), b: s.heldout[1].chars().take(40).collect(), gold: 1.0 },
        StsPair { a: s.heldout[2].chars().take(40).collect(), b: s.heldout[3].chars().take(50).collect(), gold: 2.0 },
    ];
    let (report, cos) = sts_score(&ck, &s.tokenizer, &pairs, Pooling::Mean).unwrap();
    assert!((cos[0] - 1.0).abs() < 1e-12);
    assert_eq!(report.n_pairs, 3);
}
