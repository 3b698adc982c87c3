use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use modernzh_core::tokenizer::MASK_ID;
use modernzh_core::trainloop::wrap;
use modernzh_core::wordmask::{group_words, realize_mask, token_level, MaskingUnit};
use modernzh_core::{seed, Error, Result};

use super::tok::load_tokenizer;
use crate::context::Context;
use crate::inputs::emit;

#[derive(Subcommand)]
pub enum MaskCommand {
    /// Show one realized mask over a text.
    Preview(PreviewArgs),
    /// Print `step,rate` of the masking curriculum.
    Curve(CurveArgs),
}

#[derive(Args)]
pub struct PreviewArgs {
    #[arg(long, alias = "model")]
    tokenizer: PathBuf,
    /// Literal text, or a path to a file holding it.
    #[arg(long)]
    text: String,
    /// Masking rate; overrides `--step`.
    #[arg(long)]
    rate: Option<f64>,
    /// Take the curriculum rate at this step.
    #[arg(long)]
    step: Option<u64>,
    /// Curriculum length used with `--step`.
    #[arg(long)]
    total: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CurveArgs {
    #[arg(long, alias = "total")]
    steps: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Context, cmd: MaskCommand) -> Result<()> {
    let masking = &ctx.config.masking;
    match cmd {
        MaskCommand::Preview(a) => {
            masking.validate()?;
            let model = load_tokenizer(&a.tokenizer)?;
            let path = Path::new(&a.text);
            let text = if path.is_file() {
                fs::read_to_string(path).map_err(|e| Error::io(path, e))?
            } else {
                a.text.clone()
            };
            let ids = wrap(&model.encode(text.trim_end()), usize::MAX);
            let mut grouping = group_words(&ids, &model);
            if masking.unit == MaskingUnit::Token {
                grouping = token_level(&grouping);
            }
            let rate = match (a.rate, a.step) {
                (Some(r), _) => r,
                (None, Some(step)) => {
                    let mut c = masking.curriculum.clone();
                    if let Some(t) = a.total {
                        c.total_steps = t;
                    }
                    c.validate()?;
                    c.rate(step)?
                }
                (None, None) => masking.curriculum.r_start,
            };
            let s = seed::derive(a.seed.unwrap_or(ctx.config.seed), "mask.preview");
            let plan = realize_mask(&grouping, rate, seed::derive_indexed(s, "select", 0), &masking.replacement)?;
            let (inputs, labels) = plan.apply(
                &ids,
                MASK_ID,
                model.regular_id_range(),
                seed::derive_indexed(s, "replace", 0),
            );
            let mut word_of = vec![None; ids.len()];
            for (w, g) in grouping.groups.iter().enumerate() {
                for p in g.clone() {
                    word_of[p] = Some(w);
                }
            }
            let mut out = String::from("position,token,word,masked,input\n");
            for (p, &id) in ids.iter().enumerate() {
                let word = word_of[p].map_or(String::from("-"), |w| w.to_string());
                let input = model.token(inputs[p]).unwrap_or("?");
                writeln!(
                    out,
                    "{p},{},{word},{},{input}",
                    model.token(id).unwrap_or("?"),
                    u8::from(labels[p].is_some())
                )
                .unwrap();
            }
            writeln!(out, "# realized_rate={}", plan.realized_rate).unwrap();
            emit(a.out.as_deref(), &out)
        }
        MaskCommand::Curve(a) => {
            let mut c = masking.curriculum.clone();
            if let Some(s) = a.steps {
                c.total_steps = s;
            }
            c.validate()?;
            let mut out = String::new();
            for step in 0..=c.total_steps {
                writeln!(out, "{step},{}", c.rate(step)?).unwrap();
            }
            emit(a.out.as_deref(), &out)
        }
    }
}
