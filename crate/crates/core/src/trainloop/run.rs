use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::data::{pack_greedy, TrainData};
use super::plan::StagePlan;
use crate::encoder::{loss_and_grad, Checkpoint, PackedBatch};
use crate::error::{Error, IoContext, Result};
use crate::optimsched::{step_encoder, OptimizerState};
use crate::seed;
use crate::tokenizer::{TokenizerModel, MASK_ID};
use crate::wordmask::{group_words, realize_mask, token_level, MaskingUnit};

pub const TRACE_HEADER: &str = "step,loss,eta,mask_rate";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub loss: f64,
    pub eta: f64,
    pub mask_rate: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Periodic and final checkpoints go under this directory.
    pub out_dir: Option<PathBuf>,
    /// Continue from the optimizer step stored in the checkpoint instead of
    /// starting the stage afresh.
    pub resume: bool,
}

#[derive(Clone, Debug)]
pub struct StageOutcome {
    pub checkpoint: Checkpoint,
    pub trace: Vec<TraceRow>,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{},{}", r.step, r.loss, r.eta, r.mask_rate).unwrap();
    }
    s
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    fs::write(path, trace_csv(rows)).at(path)
}

/// Mean loss over the first and last `window` rows.
pub fn smoothed_ends(trace: &[TraceRow], window: usize) -> Option<(f64, f64)> {
    if trace.len() < window || window == 0 {
        return None;
    }
    let mean = |rows: &[TraceRow]| rows.iter().map(|r| r.loss).sum::<f64>() / rows.len() as f64;
    Some((mean(&trace[..window]), mean(&trace[trace.len() - window..])))
}

pub fn checkpoint_dir(out: &Path, step: u64) -> PathBuf {
    out.join(format!("step-{step:06}"))
}

pub const FINAL_DIR: &str = "final";

/// Inputs and labels for one step. Depends only on the plan, seed and step.
pub fn prepare_batch(
    plan: &StagePlan,
    data: &TrainData,
    tokenizer: &TokenizerModel,
    root_seed: u64,
    step: u64,
) -> Result<(PackedBatch, Vec<Option<u32>>, f64)> {
    let label = plan.stage.label();
    let sampler = data.sampler(plan.max_len)?;
    let budget = plan.tokens_per_update();
    let refs = sampler.sample(budget, seed::derive(root_seed, &format!("train.{label}.data")), step);
    let seqs = pack_greedy(refs.into_iter().map(|r| data.sequence(r, plan.max_len)).collect(), budget);

    let rate = plan.curriculum.rate(step)?;
    let step_seed = seed::derive_indexed(seed::derive(root_seed, &format!("train.{label}.mask")), "step", step);
    let mut inputs = Vec::with_capacity(budget);
    let mut labels = Vec::with_capacity(budget);
    let mut packed = Vec::with_capacity(seqs.len());
    for (i, seq) in seqs.iter().enumerate() {
        let mut grouping = group_words(seq, tokenizer);
        if plan.masking_unit == MaskingUnit::Token {
            grouping = token_level(&grouping);
        }
        let plan_i = realize_mask(
            &grouping,
            rate,
            seed::derive_indexed(step_seed, "select", i as u64),
            &plan.replacement,
        )?;
        let (inp, lab) = plan_i.apply(
            seq,
            MASK_ID,
            tokenizer.regular_id_range(),
            seed::derive_indexed(step_seed, "replace", i as u64),
        );
        packed.push(inp.clone());
        inputs.extend(inp);
        labels.extend(lab);
    }
    debug_assert_eq!(inputs.len(), labels.len());
    Ok((PackedBatch::from_sequences(&packed)?, labels, rate))
}

/// Runs one training stage: per step sample a mixture batch, pack it, mask
/// at the curriculum rate, compute the MLM loss and its gradient, and take
/// a StableAdamW step at the scheduled learning rate.
pub fn run_stage(
    plan: &StagePlan,
    data: &TrainData,
    tokenizer: &TokenizerModel,
    mut ckpt: Checkpoint,
    opts: &RunOptions,
) -> Result<StageOutcome> {
    plan.validate()?;
    if tokenizer.vocab_size() > ckpt.config.vocab_size {
        return Err(Error::config(format!(
            "tokenizer has {} tokens but the encoder only {}",
            tokenizer.vocab_size(),
            ckpt.config.vocab_size
        )));
    }
    if plan.max_len > ckpt.config.max_context {
        return Err(Error::config(format!(
            "stage max_len {} exceeds encoder max_context {}",
            plan.max_len, ckpt.config.max_context
        )));
    }

    let mut opt = match ckpt.optimizer.take() {
        Some(o) if opts.resume => {
            if o.step > plan.steps {
                return Err(Error::config(format!(
                    "checkpoint is at step {} but the stage has {}",
                    o.step, plan.steps
                )));
            }
            o
        }
        _ => OptimizerState::for_weights(plan.optimizer.clone(), &ckpt.weights),
    };
    let start = opt.step;
    let cfg = ckpt.config.clone();
    let mut trace = Vec::with_capacity((plan.steps - start) as usize);

    for step in start..plan.steps {
        let (batch, labels, rate) = prepare_batch(plan, data, tokenizer, opts.seed, step)?;
        let (loss, grads) = loss_and_grad(&ckpt.weights, &cfg, &batch, &labels)?;
        if !loss.loss.is_finite() {
            if let Some(out) = &opts.out_dir {
                let dump = Checkpoint {
                    optimizer: Some(opt.clone()),
                    ..ckpt.clone()
                };
                dump.save(&out.join(format!("abort-step-{step:06}")))?;
            }
            return Err(Error::runtime(format!("non-finite loss {} at step {step}", loss.loss)));
        }
        let eta = plan.schedule.eta(step)?;
        step_encoder(&mut opt, &mut ckpt.weights, &grads, eta)?;
        log::debug!("{} step {step}: loss {:.4} eta {eta:e} mask {rate:.3}", plan.stage.label(), loss.loss);
        trace.push(TraceRow {
            step,
            loss: loss.loss,
            eta,
            mask_rate: rate,
        });
        let done = step + 1;
        if let Some(out) = &opts.out_dir {
            if plan.checkpoint_every > 0 && done % plan.checkpoint_every == 0 && done < plan.steps {
                Checkpoint {
                    optimizer: Some(opt.clone()),
                    ..ckpt.clone()
                }
                .save(&checkpoint_dir(out, done))?;
            }
        }
    }

    ckpt.optimizer = Some(opt);
    if let Some(out) = &opts.out_dir {
        ckpt.save(&out.join(FINAL_DIR))?;
        write_trace(&out.join("trace.csv"), &trace)?;
    }
    Ok(StageOutcome { checkpoint: ckpt, trace })
}
