use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use modernzh_core::corpus::CorpusManifest;
use modernzh_core::encoder::Checkpoint;
use modernzh_core::error::IoContext;
use modernzh_core::tokenizer::TokenizerModel;
use modernzh_core::trainloop::{pseudo_perplexity, run_stage, PpplConfig, RunOptions, StagePlan, TrainData, TwoStagePlan};
use modernzh_core::{seed, Error, Result};

use super::tok::load_tokenizer;
use crate::context::Context;
use crate::inputs::{emit, parse_list, read_docs, write_text};

#[derive(Subcommand)]
pub enum TrainCommand {
    /// Write desk-scale stage plans for both stages.
    Plan(PlanArgs),
    /// Run one stage from a plan file.
    Run(RunArgs),
    /// Pseudo-perplexity per length bucket.
    Pppl(PpplArgs),
}

#[derive(Args)]
pub struct PlanArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    stage1_steps: u64,
    #[arg(long, default_value_t = 40)]
    stage2_steps: u64,
    #[arg(long)]
    checkpoint_every: Option<u64>,
}

#[derive(Args)]
pub struct RunArgs {
    /// Stage plan in TOML.
    #[arg(long)]
    plan: PathBuf,
    /// Corpus manifest.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    tokenizer: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Start from this checkpoint instead of a fresh one.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// Continue the optimizer state stored in `--ckpt`.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
pub struct PpplArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    tokenizer: Option<PathBuf>,
    /// Held-out documents: text with one per line, or records.
    #[arg(long)]
    texts: PathBuf,
    #[arg(long)]
    buckets: Option<String>,
    #[arg(long)]
    positions: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn tokenizer_path(arg: Option<PathBuf>, ctx: &Context) -> Result<PathBuf> {
    arg.or_else(|| ctx.config.paths.tokenizer.clone())
        .ok_or_else(|| Error::config("no tokenizer given; pass --tokenizer or set paths.tokenizer"))
}

pub fn read_plan(path: &Path) -> Result<StagePlan> {
    let text = fs::read_to_string(path).at(path)?;
    let plan: StagePlan = toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    plan.validate()?;
    Ok(plan)
}

fn write_plan(path: &Path, plan: &StagePlan) -> Result<()> {
    let text = toml::to_string(plan).map_err(|e| Error::runtime(e.to_string()))?;
    write_text(path, &text)
}

pub fn run(ctx: &Context, cmd: TrainCommand) -> Result<()> {
    match cmd {
        TrainCommand::Plan(a) => {
            let mut plan = TwoStagePlan::desk(a.stage1_steps, a.stage2_steps);
            if let Some(k) = a.checkpoint_every {
                plan.stage1.checkpoint_every = k;
                plan.stage2.checkpoint_every = k;
            }
            plan.validate()?;
            write_plan(&a.out.join("stage1.toml"), &plan.stage1)?;
            write_plan(&a.out.join("stage2.toml"), &plan.stage2)?;
            let mut resolved = ctx.config.clone();
            resolved.train = Some(plan);
            ctx.log_config(&resolved, &a.out)
        }
        TrainCommand::Run(a) => {
            let plan = read_plan(&a.plan)?;
            let tok_dir = tokenizer_path(a.tokenizer, ctx)?;
            let tokenizer = load_tokenizer(&tok_dir)?;
            let data_path = a
                .data
                .or_else(|| ctx.config.paths.data.clone())
                .ok_or_else(|| Error::config("no data manifest given; pass --data or set paths.data"))?;
            let manifest = CorpusManifest::load(&data_path)?;
            let docs = manifest.load_documents()?;
            let data = TrainData::tokenize(&docs, &manifest.ratios(), &tokenizer)?;

            let mut resolved = ctx.config.clone();
            let ckpt = match &a.ckpt {
                Some(dir) => Checkpoint::load(dir)?,
                None => {
                    resolved.encoder.vocab_size = tokenizer.vocab_size();
                    Checkpoint::init(resolved.encoder.clone(), seed::derive(resolved.seed, "encoder.init"))?
                }
            };
            if a.resume && a.ckpt.is_none() {
                return Err(Error::config("--resume needs --ckpt"));
            }
            resolved.encoder = ckpt.config.clone();
            resolved.paths.tokenizer = Some(tok_dir);
            resolved.paths.data = Some(data_path);
            resolved.paths.out = Some(a.out.clone());
            fs::create_dir_all(&a.out).at(&a.out)?;
            ctx.log_config(&resolved, &a.out)?;
            write_plan(&a.out.join("plan.toml"), &plan)?;

            let opts = RunOptions {
                seed: resolved.seed,
                out_dir: Some(a.out.clone()),
                resume: a.resume,
            };
            let outcome = run_stage(&plan, &data, &tokenizer, ckpt, &opts)?;
            if let (Some(first), Some(last)) = (outcome.trace.first(), outcome.trace.last()) {
                log::info!(
                    "{} done: loss {:.4} at step {} to {:.4} at step {}",
                    plan.stage.label(),
                    first.loss,
                    first.step,
                    last.loss,
                    last.step
                );
            }
            Ok(())
        }
        TrainCommand::Pppl(a) => {
            let ckpt = Checkpoint::load(&a.ckpt)?;
            let tokenizer: TokenizerModel = load_tokenizer(&tokenizer_path(a.tokenizer, ctx)?)?;
            let texts = read_docs(&a.texts)?;
            let cfg = PpplConfig {
                buckets: match &a.buckets {
                    Some(b) => parse_list(b, "bucket")?,
                    None => ctx.config.pppl.buckets.clone(),
                },
                positions_per_seq: a.positions.unwrap_or(ctx.config.pppl.positions_per_seq),
                seed: seed::derive(ctx.config.seed, "pppl"),
            };
            let report = pseudo_perplexity(&ckpt, &tokenizer, &texts, &cfg)?;
            if let Some(out) = &a.out {
                let mut resolved = ctx.config.clone();
                resolved.pppl.buckets = cfg.buckets.clone();
                resolved.pppl.positions_per_seq = cfg.positions_per_seq;
                if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).at(dir)?;
                    ctx.log_config(&resolved, dir)?;
                }
            }
            emit(a.out.as_deref(), &report.to_csv())
        }
    }
}
