use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use modernzh_core::tokenizer::{
    budget_report, compression_stats, read_lexicon, Bucket, BpeTrainer, Lexicon, SizePolicy, TokenizerModel,
};
use modernzh_core::{Error, Result};

use crate::context::Context;
use crate::inputs::{emit, read_docs, read_lines};

#[derive(Subcommand)]
pub enum TokCommand {
    /// Train a BPE vocabulary.
    Train(TrainArgs),
    /// Encode text, one line per sequence, into space-separated ids.
    Encode(EncodeArgs),
    /// Chars-per-token compression and embedding budget.
    Stats(StatsArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Record file, directory of record files, or text with one document
    /// per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, alias = "size")]
    vocab_size: Option<usize>,
    /// `exact` or `round_to_64`.
    #[arg(long, conflicts_with = "round64")]
    size_policy: Option<String>,
    /// Same as `--size-policy round_to_64`.
    #[arg(long)]
    round64: bool,
    /// One word per line, used by the segmenter.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(long, alias = "model")]
    tokenizer: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long, alias = "model")]
    tokenizer: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// 512 or 8192 characters per text.
    #[arg(long, default_value = "512")]
    bucket: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<SizePolicy> {
    match s {
        "exact" => Ok(SizePolicy::Exact),
        "round_to_64" | "round64" => Ok(SizePolicy::RoundTo64),
        other => Err(Error::config(format!("unknown size policy `{other}`"))),
    }
}

pub fn load_tokenizer(dir: &Path) -> Result<TokenizerModel> {
    TokenizerModel::load(dir)
}

pub fn run(ctx: &Context, cmd: TokCommand) -> Result<()> {
    match cmd {
        TokCommand::Train(a) => {
            let mut resolved = ctx.config.clone();
            if let Some(v) = a.vocab_size {
                resolved.tokenizer.target_size = v;
            }
            if let Some(p) = &a.size_policy {
                resolved.tokenizer.size_policy = parse_policy(p)?;
            }
            if a.round64 {
                resolved.tokenizer.size_policy = SizePolicy::RoundTo64;
            }
            let lexicon = match &a.lexicon {
                Some(p) => read_lexicon(p)?,
                None => Lexicon::default(),
            };
            let docs = read_docs(&a.corpus)?;
            let model = BpeTrainer::new(resolved.tokenizer.clone(), lexicon).train(&docs, resolved.seed)?;
            model.save(&a.out)?;
            resolved.paths.tokenizer = Some(a.out.clone());
            ctx.log_config(&resolved, &a.out)?;
            log::info!("trained {} tokens from {} documents", model.vocab_size(), docs.len());
            Ok(())
        }
        TokCommand::Encode(a) => {
            let model = load_tokenizer(&a.tokenizer)?;
            let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
            let mut out = String::new();
            for line in text.lines() {
                let ids: Vec<String> = model.encode(line).iter().map(u32::to_string).collect();
                writeln!(out, "{}", ids.join(" ")).unwrap();
            }
            emit(a.out.as_deref(), &out)
        }
        TokCommand::Stats(a) => {
            let model = load_tokenizer(&a.tokenizer)?;
            let bucket: Bucket = a.bucket.parse()?;
            let texts = read_lines(&a.input)?;
            let c = compression_stats(&model, &texts, bucket)?;
            let b = budget_report(model.vocab_size(), &ctx.config.encoder)?;
            let mut out = String::from("metric,value\n");
            writeln!(out, "bucket,{}", c.bucket).unwrap();
            writeln!(out, "chars,{}", c.char_count).unwrap();
            writeln!(out, "tokens,{}", c.token_count).unwrap();
            writeln!(out, "chars_per_token,{}", c.chars_per_token).unwrap();
            writeln!(out, "vocab_size,{}", model.vocab_size()).unwrap();
            writeln!(out, "embedding_params,{}", b.embedding_params).unwrap();
            writeln!(out, "total_params,{}", b.total_params).unwrap();
            writeln!(out, "embedding_share,{}", b.embedding_share).unwrap();
            writeln!(out, "tied_embeddings,{}", b.tied_embeddings).unwrap();
            emit(a.out.as_deref(), &out)
        }
    }
}
