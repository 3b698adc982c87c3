use rand::seq::index::sample;

use super::data::wrap;
use crate::encoder::{log_sum_exp, Checkpoint, PackedBatch, Real};
use crate::error::{Error, Result};
use crate::seed;
use crate::tokenizer::{TokenizerModel, MASK_ID};

/// Tokens per forward pass when scoring masked copies.
const SCORE_BATCH_TOKENS: usize = 8192;

#[derive(Clone, Debug, PartialEq)]
pub struct PpplConfig {
    /// Sequence lengths in tokens, `[CLS]` and `[SEP]` included.
    pub buckets: Vec<usize>,
    pub positions_per_seq: usize,
    pub seed: u64,
}

impl Default for PpplConfig {
    fn default() -> Self {
        Self {
            buckets: vec![128, 512, 1024],
            positions_per_seq: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BucketPppl {
    pub bucket: usize,
    pub pppl: f64,
    pub sequences: usize,
    pub positions_sampled: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpplReport {
    pub buckets: Vec<BucketPppl>,
    pub positions_per_seq: usize,
}

impl PpplReport {
    pub fn get(&self, bucket: usize) -> Option<&BucketPppl> {
        self.buckets.iter().find(|b| b.bucket == bucket)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bucket,pppl,sequences,positions_sampled\n");
        for b in &self.buckets {
            s.push_str(&format!("{},{},{},{}\n", b.bucket, b.pppl, b.sequences, b.positions_sampled));
        }
        s
    }
}

/// `-log p(target)` and the linear partition ratio `sum_j exp(x_j - x_t)`
/// (infinite on overflow).
fn score<T: Real>(row: ndarray::ArrayView1<T>, target: usize) -> (f64, f64) {
    let xt = row[target].as_f64();
    let nll = log_sum_exp(row.iter().copied()) - xt;
    let ratio = row.iter().map(|&x| (x.as_f64() - xt).exp()).sum::<f64>();
    (nll, ratio)
}

/// `exp(mean(nll))`, evaluated as `S_0 * exp(mean(nll - nll_0))` with the
/// first position's partition ratio `S_0`, which is exact when every
/// position scores the same.
fn geometric_pppl(scores: &[(f64, f64)]) -> f64 {
    let (nll0, s0) = scores[0];
    let mut mean = 0.0;
    for (k, &(nll, _)) in scores.iter().enumerate() {
        mean += ((nll - nll0) - mean) / (k + 1) as f64;
    }
    if s0.is_finite() {
        s0 * mean.exp()
    } else {
        (nll0 + mean).exp()
    }
}

/// Pseudo-perplexity per length bucket. A bucket takes every text whose
/// wrapped token sequence reaches the bucket length, cut to exactly that
/// length. In each sequence `positions_per_seq` non-special positions are
/// drawn without replacement; each is masked alone and scored.
pub fn pseudo_perplexity<S: AsRef<str>>(
    ckpt: &Checkpoint,
    tokenizer: &TokenizerModel,
    texts: &[S],
    cfg: &PpplConfig,
) -> Result<PpplReport> {
    if cfg.positions_per_seq == 0 {
        return Err(Error::config("positions_per_seq must be at least 1"));
    }
    if let Some(&b) = cfg.buckets.iter().find(|&&b| b < 3 || b > ckpt.config.max_context) {
        return Err(Error::config(format!(
            "bucket {b} outside 3..={}",
            ckpt.config.max_context
        )));
    }
    let encoded: Vec<Vec<u32>> = texts.iter().map(|t| tokenizer.encode(t.as_ref())).collect();
    let mut out = Vec::new();
    for (bi, &bucket) in cfg.buckets.iter().enumerate() {
        let seqs: Vec<Vec<u32>> = encoded
            .iter()
            .filter(|d| d.len() + 2 >= bucket)
            .map(|d| wrap(d, bucket))
            .collect();
        if seqs.is_empty() {
            log::warn!("pseudo-perplexity bucket {bucket} has no sequences, omitted");
            continue;
        }
        let bucket_seed = seed::derive_indexed(cfg.seed, "pppl.bucket", bi as u64);
        let mut copies: Vec<(Vec<u32>, usize, u32)> = Vec::new();
        for (si, seq) in seqs.iter().enumerate() {
            let inner = seq.len() - 2;
            let k = cfg.positions_per_seq.min(inner);
            let mut rng = seed::rng(seed::derive_indexed(bucket_seed, "seq", si as u64));
            let mut picks = sample(&mut rng, inner, k).into_vec();
            picks.sort_unstable();
            for p in picks {
                let pos = p + 1;
                let mut c = seq.clone();
                c[pos] = MASK_ID;
                copies.push((c, pos, seq[pos]));
            }
        }

        let per_batch = (SCORE_BATCH_TOKENS / bucket).max(1);
        let mut scores = Vec::with_capacity(copies.len());
        for chunk in copies.chunks(per_batch) {
            let seqs: Vec<&[u32]> = chunk.iter().map(|(c, _, _)| c.as_slice()).collect();
            let batch = PackedBatch::from_sequences(&seqs)?;
            let logits = ckpt.forward(&batch)?.logits;
            for (j, (_, pos, target)) in chunk.iter().enumerate() {
                scores.push(score(logits.row(batch.sequence(j).start + pos), *target as usize));
            }
        }
        out.push(BucketPppl {
            bucket,
            pppl: geometric_pppl(&scores),
            sequences: seqs.len(),
            positions_sampled: scores.len(),
        });
    }
    Ok(PpplReport {
        buckets: out,
        positions_per_seq: cfg.positions_per_seq,
    })
}
