use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use modernzh_core::encoder::{log_sum_exp, Checkpoint, PackedBatch};
use modernzh_core::{Error, Result};

use super::tok::load_tokenizer;
use crate::context::Context;
use crate::inputs::{emit, read_lines};

#[derive(Subcommand)]
pub enum EncCommand {
    /// Write a freshly initialized checkpoint from the `[encoder]` config.
    Init(InitArgs),
    /// Run the encoder over sequences of ids, one sequence per line.
    Forward(ForwardArgs),
}

#[derive(Args)]
pub struct InitArgs {
    #[arg(long)]
    out: PathBuf,
    /// Take the vocabulary size from this tokenizer.
    #[arg(long)]
    tokenizer: Option<PathBuf>,
    #[arg(long)]
    vocab_size: Option<usize>,
}

#[derive(Args)]
pub struct ForwardArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Space-separated token ids, one sequence per line.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Context, cmd: EncCommand) -> Result<()> {
    match cmd {
        EncCommand::Init(a) => {
            let mut resolved = ctx.config.clone();
            if let Some(t) = &a.tokenizer {
                resolved.encoder.vocab_size = load_tokenizer(t)?.vocab_size();
            }
            if let Some(v) = a.vocab_size {
                resolved.encoder.vocab_size = v;
            }
            let ck = Checkpoint::init(resolved.encoder.clone(), resolved.seed)?;
            ck.save(&a.out)?;
            ctx.log_config(&resolved, &a.out)
        }
        EncCommand::Forward(a) => {
            let ck = Checkpoint::load(&a.ckpt)?;
            let seqs = read_lines(&a.input)?
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.split_whitespace()
                        .map(|t| {
                            t.parse::<u32>()
                                .map_err(|_| Error::input(format!("line {}: `{t}` is not a token id", i + 1)))
                        })
                        .collect::<Result<Vec<u32>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let batch = PackedBatch::from_sequences(&seqs)?;
            let out = ck.forward(&batch)?;
            let mut csv = String::from("sequence,position,argmax,max_logit,log_sum_exp\n");
            for (s, r) in batch.sequences().enumerate() {
                for (p, t) in r.enumerate() {
                    let row = out.logits.row(t);
                    let (arg, max) = row
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                    writeln!(csv, "{s},{p},{arg},{max},{}", log_sum_exp(row.iter().copied())).unwrap();
                }
            }
            emit(a.out.as_deref(), &csv)
        }
    }
}
