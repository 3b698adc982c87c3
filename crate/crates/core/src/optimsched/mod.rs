//! Learning-rate schedules and the StableAdamW optimizer.

mod adamw;
mod schedule;

pub use adamw::{stable_adamw_step, step_encoder, AdamWConfig, Moments, OptimizerState, StepStats};
pub use schedule::{
    damped_cosine_eta, stage2_eta, warmup_eta, wsd_eta, Phase, Schedule, ScheduleConfig,
};
