use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use modernzh_core::optimsched::{Phase, ScheduleConfig};
use modernzh_core::Result;

use crate::context::Context;
use crate::inputs::emit;

#[derive(Subcommand)]
pub enum SchedCommand {
    /// Print `step,eta` for every step from 0 to --steps inclusive.
    Dump(DumpArgs),
}

#[derive(Args)]
pub struct DumpArgs {
    /// damped_cosine, warmup_ramp, stage2_linear or wsd.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    emax: Option<f64>,
    #[arg(long)]
    emin: Option<f64>,
    #[arg(long = "N")]
    cycles: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn schedule_csv(cfg: &ScheduleConfig) -> Result<String> {
    let mut s = String::new();
    for step in 0..=cfg.total_steps {
        writeln!(s, "{step},{}", cfg.eta(step)?).unwrap();
    }
    Ok(s)
}

pub fn run(ctx: &Context, cmd: SchedCommand) -> Result<()> {
    match cmd {
        SchedCommand::Dump(a) => {
            let mut cfg = ctx.config.schedule.clone();
            if let Some(k) = &a.kind {
                cfg.phase = k.parse::<Phase>()?;
            }
            cfg.total_steps = a.steps.unwrap_or(cfg.total_steps);
            cfg.eta_max = a.emax.unwrap_or(cfg.eta_max);
            cfg.eta_min = a.emin.unwrap_or(cfg.eta_min);
            cfg.cycles = a.cycles.unwrap_or(cfg.cycles);
            cfg.damping_gamma = a.gamma.unwrap_or(cfg.damping_gamma);
            cfg.validate()?;
            let csv = schedule_csv(&cfg)?;
            if let Some(out) = &a.out {
                let mut resolved = ctx.config.clone();
                resolved.schedule = cfg;
                if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                    ctx.log_config(&resolved, dir)?;
                }
            }
            emit(a.out.as_deref(), &csv)
        }
    }
}
