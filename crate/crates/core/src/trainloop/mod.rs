//! Two-stage pre-training driver and pseudo-perplexity evaluation.

mod data;
mod plan;
mod pppl;
mod run;

pub use data::{pack_greedy, wrap, TrainData};
pub use plan::{check_tokens_per_update, Stage, StagePlan, TwoStagePlan, TOKENS_PER_UPDATE_TOLERANCE};
pub use pppl::{pseudo_perplexity, BucketPppl, PpplConfig, PpplReport};
pub use run::{
    checkpoint_dir, prepare_batch, run_stage, smoothed_ends, trace_csv, write_trace, RunOptions, StageOutcome,
    TraceRow, FINAL_DIR, TRACE_HEADER,
};
