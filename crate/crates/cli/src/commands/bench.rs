use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use modernzh_core::benchkit::{read_pairs, sts_score, throughput, BenchBucket, BenchConfig, Pooling, Precision};
use modernzh_core::encoder::Checkpoint;
use modernzh_core::error::IoContext;
use modernzh_core::{seed, Result};

use super::tok::load_tokenizer;
use crate::context::Context;
use crate::inputs::{emit, write_text};

#[derive(Subcommand)]
pub enum BenchCommand {
    /// Inference throughput and attention score counts for one bucket.
    Run(RunArgs),
    /// Semantic similarity correlation from cosine scores.
    Sts(StsArgs),
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// `<seq_len>x<batch>`.
    #[arg(long, default_value = "512x4")]
    bucket: String,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// `full` or `reduced`.
    #[arg(long)]
    precision: Option<String>,
    /// Activation memory budget in bytes; larger batches are halved.
    #[arg(long)]
    memory_budget: Option<usize>,
    /// Deterministic counts CSV; timings go to `<stem>.timing.csv` beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct StsArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    tokenizer: PathBuf,
    /// Tab-separated `textA`, `textB`, `gold`.
    #[arg(long)]
    pairs: PathBuf,
    /// `mean` or `cls`.
    #[arg(long)]
    pooling: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Context, cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Run(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let bucket: BenchBucket = a.bucket.parse()?;
            let precision: Precision = match &a.precision {
                Some(p) => p.parse()?,
                None => ctx.config.precision,
            };
            let mut resolved = ctx.config.clone();
            resolved.precision = precision;
            resolved.bench.runs = a.runs.unwrap_or(resolved.bench.runs);
            resolved.bench.warmup = a.warmup.unwrap_or(resolved.bench.warmup);
            resolved.bench.memory_budget = a.memory_budget.or(resolved.bench.memory_budget);
            resolved.bench.buckets = vec![bucket.to_string()];
            let cfg = BenchConfig {
                warmup: resolved.bench.warmup,
                runs: resolved.bench.runs,
                precision,
                memory_budget: resolved.bench.memory_budget,
                seed: seed::derive(resolved.seed, "bench"),
            };
            let report = throughput(&ckpt, bucket, &cfg)?;
            if report.batch_reduced() {
                log::warn!("batch reduced from {} to {} to fit the memory budget", report.requested, report.bucket);
            }
            log::info!("{} tokens/s over {} runs", report.mean_tokens_per_second, report.runs);
            match &a.out {
                Some(out) => {
                    write_text(out, &report.counts_csv())?;
                    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
                    write_text(&out.with_file_name(format!("{stem}.timing.csv")), &report.timing_csv())?;
                    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).map_or(PathBuf::from("."), PathBuf::from);
                    fs::create_dir_all(&dir).at(&dir)?;
                    ctx.log_config(&resolved, &dir)
                }
                None => emit(None, &(report.counts_csv() + &report.timing_csv())),
            }
        }
        BenchCommand::Sts(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let tokenizer = load_tokenizer(&a.tokenizer)?;
            let pairs = read_pairs(&a.pairs)?;
            let pooling: Pooling = match &a.pooling {
                Some(p) => p.parse()?,
                None => ctx.config.bench.pooling,
            };
            let (report, cosines) = sts_score(&ckpt, &tokenizer, &pairs, pooling)?;
            let mut out = String::from("metric,value\n");
            writeln!(out, "pearson_r,{}", report.pearson_r).unwrap();
            writeln!(out, "spearman_rho,{}", report.spearman_rho).unwrap();
            writeln!(out, "n_pairs,{}", report.n_pairs).unwrap();
            for (i, c) in cosines.iter().enumerate() {
                writeln!(out, "cosine_{i},{c}").unwrap();
            }
            emit(a.out.as_deref(), &out)
        }
    }
}
