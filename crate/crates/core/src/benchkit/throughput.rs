use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{analytic_layer_counts, forward_weights, Checkpoint, EncoderConfig, LayerKind, PackedBatch, Real};
use crate::error::{Error, Result};
use crate::seed;
use crate::tokenizer::NUM_SPECIALS;

pub const MIN_RUNS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Full,
    /// f32, for measurement only.
    Reduced,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Precision::Full),
            "reduced" => Ok(Precision::Reduced),
            other => Err(Error::config(format!("unknown precision `{other}`"))),
        }
    }
}

/// Sequence length and batch size of one measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchBucket {
    pub seq_len: usize,
    pub batch: usize,
}

impl BenchBucket {
    pub const LEN512_B32: Self = Self { seq_len: 512, batch: 32 };
    pub const LEN8192_B8: Self = Self { seq_len: 8192, batch: 8 };
    pub const DESK_SHORT: Self = Self { seq_len: 512, batch: 4 };
    pub const DESK_LONG: Self = Self { seq_len: 2048, batch: 2 };

    pub fn tokens(&self) -> usize {
        self.seq_len * self.batch
    }
}

impl FromStr for BenchBucket {
    type Err = Error;

    /// `LENxBATCH`, e.g. `512x32`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("bucket `{s}` is not of the form LENxBATCH"));
        let (l, b) = s.split_once('x').ok_or_else(bad)?;
        let seq_len: usize = l.trim().parse().map_err(|_| bad())?;
        let batch: usize = b.trim().parse().map_err(|_| bad())?;
        if seq_len == 0 || batch == 0 {
            return Err(bad());
        }
        Ok(Self { seq_len, batch })
    }
}

impl fmt::Display for BenchBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.seq_len, self.batch)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub warmup: usize,
    pub runs: usize,
    pub precision: Precision,
    /// Activation memory limit in bytes; the batch is halved until the
    /// estimate fits.
    pub memory_budget: Option<usize>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            warmup: 1,
            runs: 10,
            precision: Precision::Full,
            memory_budget: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub requested: BenchBucket,
    /// Bucket actually measured, after any batch reduction.
    pub bucket: BenchBucket,
    pub precision: Precision,
    pub runs: usize,
    pub per_run_tokens_per_second: Vec<f64>,
    pub mean_tokens_per_second: f64,
    pub layer_kinds: Vec<LayerKind>,
    pub analytic_counts: Vec<u64>,
    pub instrumented_counts: Vec<u64>,
}

impl BenchReport {
    pub fn batch_reduced(&self) -> bool {
        self.bucket != self.requested
    }

    pub fn total_score_count(&self, kind: LayerKind) -> u64 {
        self.layer_kinds
            .iter()
            .zip(&self.analytic_counts)
            .filter(|(k, _)| **k == kind)
            .map(|(_, c)| c)
            .sum()
    }

    /// Deterministic part of the report: shapes and attention-score counts.
    pub fn counts_csv(&self) -> String {
        let mut s = format!(
            "# requested={} measured={} precision={:?} runs={}\nlayer,kind,analytic_scores,instrumented_scores\n",
            self.requested, self.bucket, self.precision, self.runs
        );
        for (l, ((k, a), i)) in self
            .layer_kinds
            .iter()
            .zip(&self.analytic_counts)
            .zip(&self.instrumented_counts)
            .enumerate()
        {
            let kind = match k {
                LayerKind::Global => "global",
                LayerKind::Local => "local",
            };
            s.push_str(&format!("{l},{kind},{a},{i}\n"));
        }
        s
    }

    /// Wall-clock part: one row per timed run, then the mean.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("run,tokens_per_second\n");
        for (r, v) in self.per_run_tokens_per_second.iter().enumerate() {
            s.push_str(&format!("{r},{v}\n"));
        }
        s.push_str(&format!("mean,{}\n", self.mean_tokens_per_second));
        s
    }
}

/// Rough peak activation size of one forward pass, in bytes.
pub fn activation_bytes(cfg: &EncoderConfig, bucket: BenchBucket, elem: usize) -> usize {
    let n = bucket.tokens();
    let per_token = 10 * cfg.hidden + 3 * cfg.intermediate_size() + cfg.vocab_size;
    let window = bucket.seq_len;
    (n * per_token + cfg.heads * window) * elem
}

fn fit_batch(cfg: &EncoderConfig, requested: BenchBucket, elem: usize, budget: Option<usize>) -> Result<BenchBucket> {
    let Some(budget) = budget else { return Ok(requested) };
    let mut b = requested;
    while activation_bytes(cfg, b, elem) > budget {
        if b.batch == 1 {
            return Err(Error::runtime(format!(
                "a single {}-token sequence needs about {} bytes, over the budget of {budget}",
                b.seq_len,
                activation_bytes(cfg, b, elem)
            )));
        }
        b.batch /= 2;
    }
    if b != requested {
        log::warn!("batch reduced from {} to {} to fit the memory budget", requested.batch, b.batch);
    }
    Ok(b)
}

fn random_batch(cfg: &EncoderConfig, bucket: BenchBucket, seed: u64) -> Result<PackedBatch> {
    let mut rng = seed::rng(seed::derive(seed, "bench.tokens"));
    let lo = (NUM_SPECIALS as u32).min(cfg.vocab_size as u32 - 1);
    let seqs: Vec<Vec<u32>> = (0..bucket.batch)
        .map(|_| {
            (0..bucket.seq_len)
                .map(|_| rng.random_range(lo..cfg.vocab_size as u32))
                .collect()
        })
        .collect();
    PackedBatch::from_sequences(&seqs)
}

fn time_runs<T: Real>(ckpt: &Checkpoint, batch: &PackedBatch, cfg: &BenchConfig) -> Result<(Vec<f64>, Vec<u64>)> {
    let weights = ckpt.weights.cast::<T>();
    let mut counts = Vec::new();
    for _ in 0..cfg.warmup {
        counts = forward_weights(&weights, &ckpt.config, batch)?.score_counts;
    }
    let mut per_run = Vec::with_capacity(cfg.runs);
    for _ in 0..cfg.runs {
        let start = Instant::now();
        let out = forward_weights(&weights, &ckpt.config, batch)?;
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        per_run.push(batch.num_tokens() as f64 / secs);
        counts = out.score_counts;
    }
    Ok((per_run, counts))
}

/// Times `forward` over `runs` repetitions after warmup and reports
/// tokens per second together with per-layer attention-score counts.
pub fn throughput(ckpt: &Checkpoint, bucket: BenchBucket, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.runs < MIN_RUNS {
        return Err(Error::config(format!("at least {MIN_RUNS} runs are needed, got {}", cfg.runs)));
    }
    if bucket.seq_len > ckpt.config.max_context {
        return Err(Error::config(format!(
            "bucket length {} exceeds max_context {}",
            bucket.seq_len, ckpt.config.max_context
        )));
    }
    let elem = match cfg.precision {
        Precision::Full => 8,
        Precision::Reduced => 4,
    };
    let measured = fit_batch(&ckpt.config, bucket, elem, cfg.memory_budget)?;
    let batch = random_batch(&ckpt.config, measured, cfg.seed)?;
    let (per_run, instrumented) = match cfg.precision {
        Precision::Full => time_runs::<f64>(ckpt, &batch, cfg)?,
        Precision::Reduced => time_runs::<f32>(ckpt, &batch, cfg)?,
    };
    let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
    let lens = vec![measured.seq_len; measured.batch];
    Ok(BenchReport {
        requested: bucket,
        bucket: measured,
        precision: cfg.precision,
        runs: cfg.runs,
        mean_tokens_per_second: mean,
        per_run_tokens_per_second: per_run,
        layer_kinds: (0..ckpt.config.layers).map(|l| ckpt.config.layer_kind(l)).collect(),
        analytic_counts: analytic_layer_counts(&ckpt.config, &lens),
        instrumented_counts: instrumented,
    })
}
