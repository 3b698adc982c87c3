mod common;

use common::rng;
use modernzh_core::tokenizer::{train_bpe, SizePolicy, TokenizerModel, CLS_ID, MASK_ID, SEP_ID};
use modernzh_core::wordmask::{group_words, realize_mask, MaskingCurriculum, ReplacementPolicy, WordGrouping};
use proptest::prelude::*;
use rand::Rng;

fn model() -> TokenizerModel {
    let corpus = ["中国人的大学生", "学生的中国", "大学 人们", "abcab cab ab"];
    train_bpe(&corpus, 64, SizePolicy::Exact).unwrap()
}

/// Checks the partition and whole-span rules; returns a description of the
/// first violation.
fn violation(tokens: &[u32], g: &WordGrouping, masked: &[usize], model: &TokenizerModel) -> Option<String> {
    let mut owner = vec![None; tokens.len()];
    for (k, span) in g.groups.iter().enumerate() {
        if span.is_empty() {
            return Some(format!("empty span {k}"));
        }
        for p in span.clone() {
            if owner[p].is_some() {
                return Some(format!("position {p} in two spans"));
            }
            if model.is_special(tokens[p]) {
                return Some(format!("special at {p} inside span {k}"));
            }
            if p > span.start && !model.is_continuation(tokens[p]) {
                return Some(format!("word-initial token at {p} inside span {k}"));
            }
            owner[p] = Some(k);
        }
        if span.end < tokens.len() && model.is_continuation(tokens[span.end]) {
            return Some(format!("span {k} stops before a continuation"));
        }
    }
    for (p, &t) in tokens.iter().enumerate() {
        if !model.is_special(t) && owner[p].is_none() {
            return Some(format!("position {p} uncovered"));
        }
    }
    let set: std::collections::BTreeSet<usize> = masked.iter().copied().collect();
    for (k, span) in g.groups.iter().enumerate() {
        let hit = span.clone().filter(|p| set.contains(p)).count();
        if hit != 0 && hit != span.len() {
            return Some(format!("span {k} partly masked"));
        }
    }
    if masked.iter().any(|&p| owner[p].is_none()) {
        return Some("special position masked".into());
    }
    None
}

#[test]
fn whole_word_integrity_over_a_million_sequences() {
    let m = model();
    let regular = m.regular_id_range();
    let policy = ReplacementPolicy::default();
    let mut r = rng(2024);
    let mut violations = 0usize;
    for i in 0..1_000_000u64 {
        let len = r.random_range(0..24);
        let tokens: Vec<u32> = (0..len)
            .map(|_| match r.random_range(0..20) {
                0 => CLS_ID,
                1 => SEP_ID,
                _ => r.random_range(regular.clone()),
            })
            .collect();
        let g = group_words(&tokens, &m);
        let rate = r.random_range(0.01..=1.0);
        let plan = realize_mask(&g, rate, i, &policy).unwrap();
        if let Some(v) = violation(&tokens, &g, &plan.masked_positions, &m) {
            violations += 1;
            if violations < 5 {
                eprintln!("{tokens:?}: {v}");
            }
        }
    }
    assert_eq!(violations, 0);
}

/// 100 words of one to three tokens each.
fn hundred_words(m: &TokenizerModel, seed: u64) -> Vec<u32> {
    let initial: Vec<u32> = m.regular_id_range().filter(|&i| !m.is_continuation(i)).collect();
    let cont: Vec<u32> = m.regular_id_range().filter(|&i| m.is_continuation(i)).collect();
    let mut r = rng(seed);
    let mut out = vec![CLS_ID];
    for _ in 0..100 {
        out.push(initial[r.random_range(0..initial.len())]);
        for _ in 0..r.random_range(0..3) {
            out.push(cont[r.random_range(0..cont.len())]);
        }
    }
    out.push(SEP_ID);
    out
}

#[test]
fn mean_realized_rate_tracks_target() {
    let m = model();
    let tokens = hundred_words(&m, 1);
    let g = group_words(&tokens, &m);
    assert_eq!(g.groups.len(), 100);
    for target in [0.15, 0.225, 0.30] {
        let mean = (0..10_000u64)
            .map(|s| realize_mask(&g, target, s, &ReplacementPolicy::default()).unwrap().realized_rate)
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - target).abs() <= 0.01, "target {target}: mean {mean}");
    }
}

#[test]
fn apply_touches_only_masked_positions() {
    let m = model();
    let tokens = hundred_words(&m, 3);
    let g = group_words(&tokens, &m);
    let plan = realize_mask(&g, 0.3, 5, &ReplacementPolicy::default()).unwrap();
    let (inputs, labels) = plan.apply(&tokens, MASK_ID, m.regular_id_range(), 6);
    for p in 0..tokens.len() {
        if plan.masked_positions.contains(&p) {
            assert_eq!(labels[p], Some(tokens[p]));
        } else {
            assert_eq!(labels[p], None);
            assert_eq!(inputs[p], tokens[p]);
        }
    }
}

proptest! {
    #[test]
    fn curriculum_stays_in_range(steps in 1u64..100_000, at in 0.0f64..=1.0) {
        let c = MaskingCurriculum { total_steps: steps, ..MaskingCurriculum::default() };
        let step = (at * steps as f64).round() as u64;
        let rate = c.rate(step).unwrap();
        prop_assert!((0.15..=0.30).contains(&rate));
    }

    #[test]
    fn curriculum_anchors(steps in 2u64..100_000) {
        let c = MaskingCurriculum { total_steps: steps, ..MaskingCurriculum::default() };
        prop_assert_eq!(c.rate(0).unwrap(), 0.15);
        prop_assert_eq!(c.rate(c.warmup_steps()).unwrap(), 0.30);
        prop_assert_eq!(c.rate(steps).unwrap(), 0.15);
    }

    #[test]
    fn realized_rate_reaches_target(seed in 0u64..10_000, rate in 0.01f64..=1.0) {
        let m = model();
        let tokens = hundred_words(&m, seed);
        let g = group_words(&tokens, &m);
        let plan = realize_mask(&g, rate, seed, &ReplacementPolicy::default()).unwrap();
        let maskable = g.maskable_positions() as f64;
        prop_assert!(plan.realized_rate + 1e-12 >= rate);
        // Overshoot is at most the last span taken.
        prop_assert!(plan.realized_rate - rate < 3.0 / maskable + 1e-12);
        prop_assert_eq!(plan.realized_rate, plan.masked_positions.len() as f64 / maskable);
    }
}
