use modernzh_core::encoder::{Checkpoint, EncoderConfig, EncoderWeights};
use modernzh_core::optimsched::{Phase, Schedule, ScheduleConfig};
use modernzh_core::tokenizer::{train_bpe, SizePolicy};
use modernzh_core::toy::{toy_encoder_config, toy_setup, ToySetup};
use modernzh_core::trainloop::{
    checkpoint_dir, pseudo_perplexity, run_stage, smoothed_ends, PpplConfig, RunOptions, StagePlan,
};
use std::sync::OnceLock;

fn setup() -> &'static ToySetup {
    static SETUP: OnceLock<ToySetup> = OnceLock::new();
    SETUP.get_or_init(|| toy_setup(7, 40).unwrap())
}

fn fresh(seed: u64) -> Checkpoint {
    Checkpoint::init(toy_encoder_config(setup().tokenizer.vocab_size()), seed).unwrap()
}

fn opts(seed: u64) -> RunOptions {
    RunOptions {
        seed,
        out_dir: None,
        resume: false,
    }
}

#[test]
fn zero_learning_rate_leaves_weights_alone() {
    let s = setup();
    let mut plan = StagePlan::stage1(128, 2, 1);
    plan.schedule = Schedule::single(ScheduleConfig {
        phase: Phase::WarmupRamp,
        eta_min: 0.0,
        total_steps: 1,
        ..ScheduleConfig::default()
    });
    let start = fresh(1);
    let out = run_stage(&plan, &s.data, &s.tokenizer, start.clone(), &opts(1)).unwrap();
    assert_eq!(out.trace[0].eta, 0.0);
    assert_eq!(out.checkpoint.weights, start.weights);
}

#[test]
fn trace_eta_is_the_schedule() {
    let s = setup();
    let plan = StagePlan::stage1(64, 2, 30);
    let out = run_stage(&plan, &s.data, &s.tokenizer, fresh(2), &opts(2)).unwrap();
    for row in &out.trace {
        assert_eq!(row.eta, plan.schedule.eta(row.step).unwrap());
        assert_eq!(row.mask_rate, plan.curriculum.rate(row.step).unwrap());
    }
}

#[test]
fn two_hundred_steps_reduce_smoothed_loss() {
    let s = setup();
    let plan = StagePlan::stage1(128, 8, 200);
    let out = run_stage(&plan, &s.data, &s.tokenizer, fresh(3), &opts(3)).unwrap();
    let (first, last) = smoothed_ends(&out.trace, 20).unwrap();
    assert!(last < first, "smoothed loss {first} -> {last}");
}

#[test]
fn identical_seeds_reproduce_bit_for_bit() {
    let s = setup();
    let plan = StagePlan::stage1(64, 4, 15);
    let a = run_stage(&plan, &s.data, &s.tokenizer, fresh(4), &opts(9)).unwrap();
    let b = run_stage(&plan, &s.data, &s.tokenizer, fresh(4), &opts(9)).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.checkpoint.weights, b.checkpoint.weights);
    let c = run_stage(&plan, &s.data, &s.tokenizer, fresh(4), &opts(10)).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn resume_from_periodic_checkpoint_matches_straight_run() {
    let s = setup();
    let dir = tempfile::tempdir().unwrap();
    let mut plan = StagePlan::stage1(64, 4, 20);
    plan.checkpoint_every = 10;
    let straight = run_stage(
        &plan,
        &s.data,
        &s.tokenizer,
        fresh(5),
        &RunOptions {
            seed: 5,
            out_dir: Some(dir.path().to_path_buf()),
            resume: false,
        },
    )
    .unwrap();
    let mid = Checkpoint::load(&checkpoint_dir(dir.path(), 10)).unwrap();
    assert_eq!(mid.optimizer.as_ref().unwrap().step, 10);
    let resumed = run_stage(
        &plan,
        &s.data,
        &s.tokenizer,
        mid,
        &RunOptions {
            seed: 5,
            out_dir: None,
            resume: true,
        },
    )
    .unwrap();
    assert_eq!(resumed.trace[..], straight.trace[10..]);
    assert_eq!(resumed.checkpoint.weights, straight.checkpoint.weights);
}

fn tiny_cfg(vocab: usize, tie: bool) -> EncoderConfig {
    EncoderConfig {
        layers: 1,
        hidden: 2,
        heads: 1,
        intermediate: Some(2),
        global_layer_interval: 1,
        max_context: 64,
        vocab_size: vocab,
        tie_embeddings: tie,
        ..EncoderConfig::default()
    }
}

fn repeated_char(n: usize) -> String {
    "中".repeat(n)
}

#[test]
fn uniform_model_scores_vocab_size_exactly() {
    // Each CJK character is its own word without a lexicon.
    let tok = train_bpe(&["中中中"], 7, SizePolicy::Exact).unwrap();
    let texts = [repeated_char(40), repeated_char(50)];
    for v in [7usize, 11, 64, 100, 512, 32_979] {
        let cfg = tiny_cfg(v, true);
        let ckpt = Checkpoint::new(cfg.clone(), EncoderWeights::zero_init(&cfg));
        let cfg = PpplConfig {
            buckets: vec![16, 32],
            positions_per_seq: 8,
            seed: 1,
        };
        let report = pseudo_perplexity(&ckpt, &tok, &texts, &cfg).unwrap();
        for b in &report.buckets {
            assert_eq!(b.pppl, v as f64, "bucket {}", b.bucket);
        }
    }
}

#[test]
fn certain_model_over_one_token_scores_one() {
    let tok = train_bpe(&["中中中"], 7, SizePolicy::Exact).unwrap();
    let target = tok.id("中").unwrap() as usize;
    let cfg = tiny_cfg(7, false);
    let mut w = EncoderWeights::<f64>::zero_init(&cfg);
    w.tok_embed.column_mut(0).fill(1.0);
    w.decoder.as_mut().unwrap()[[target, 0]] = 1000.0;
    let ckpt = Checkpoint::new(cfg, w);
    let report = pseudo_perplexity(
        &ckpt,
        &tok,
        &[repeated_char(40)],
        &PpplConfig {
            buckets: vec![8, 32],
            positions_per_seq: 32,
            seed: 2,
        },
    )
    .unwrap();
    for b in &report.buckets {
        assert_eq!(b.pppl, 1.0);
    }
}

#[test]
fn training_lowers_heldout_pppl() {
    let s = setup();
    let untrained = fresh(6);
    let plan = StagePlan::stage1(128, 8, 120);
    let trained = run_stage(&plan, &s.data, &s.tokenizer, untrained.clone(), &opts(6)).unwrap();
    let cfg = PpplConfig {
        buckets: vec![128],
        positions_per_seq: 16,
        seed: 3,
    };
    let before = pseudo_perplexity(&untrained, &s.tokenizer, &s.heldout, &cfg).unwrap();
    let after = pseudo_perplexity(&trained.checkpoint, &s.tokenizer, &s.heldout, &cfg).unwrap();
    assert!(after.buckets[0].pppl < before.buckets[0].pppl);
}
