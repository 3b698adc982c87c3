use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimsched::{AdamWConfig, Schedule, ScheduleConfig};
use crate::wordmask::{MaskingCurriculum, MaskingUnit, ReplacementPolicy};

/// Largest relative change in tokens per update allowed between stages.
pub const TOKENS_PER_UPDATE_TOLERANCE: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::I => "stage1",
            Stage::II => "stage2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub stage: Stage,
    pub max_len: usize,
    pub batch_sequences: usize,
    pub steps: u64,
    pub schedule: Schedule,
    pub curriculum: MaskingCurriculum,
    #[serde(default)]
    pub masking_unit: MaskingUnit,
    #[serde(default)]
    pub replacement: ReplacementPolicy,
    #[serde(default)]
    pub optimizer: AdamWConfig,
    /// Write a checkpoint every this many steps; 0 only at the end.
    #[serde(default)]
    pub checkpoint_every: u64,
}

impl StagePlan {
    /// Short-context stage: learning-rate warmup over the masking warmup,
    /// then the damped cosine.
    pub fn stage1(max_len: usize, batch_sequences: usize, steps: u64) -> Self {
        let curriculum = MaskingCurriculum {
            total_steps: steps,
            ..MaskingCurriculum::default()
        };
        let warm = curriculum.warmup_steps().min(steps.saturating_sub(1));
        let schedule = Schedule::with_warmup(warm, ScheduleConfig::damped_cosine(steps - warm));
        Self {
            stage: Stage::I,
            max_len,
            batch_sequences,
            steps,
            schedule,
            curriculum,
            masking_unit: MaskingUnit::WholeWord,
            replacement: ReplacementPolicy::default(),
            optimizer: AdamWConfig::default(),
            checkpoint_every: 0,
        }
    }

    /// Long-context stage: linear decay at a lower rate and a fixed
    /// masking rate equal to the curriculum's final rate.
    pub fn stage2(max_len: usize, batch_sequences: usize, steps: u64) -> Self {
        let end = MaskingCurriculum::default().r_end;
        Self {
            stage: Stage::II,
            max_len,
            batch_sequences,
            steps,
            schedule: Schedule::single(ScheduleConfig::stage2(steps)),
            curriculum: MaskingCurriculum::fixed(end, steps),
            masking_unit: MaskingUnit::WholeWord,
            replacement: ReplacementPolicy::default(),
            optimizer: AdamWConfig::default(),
            checkpoint_every: 0,
        }
    }

    pub fn tokens_per_update(&self) -> usize {
        self.batch_sequences * self.max_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len < 3 || self.batch_sequences == 0 || self.steps == 0 {
            return Err(Error::config("stage needs max_len >= 3, batch_sequences >= 1 and steps >= 1"));
        }
        self.schedule.validate()?;
        if self.schedule.total_steps() != self.steps {
            return Err(Error::config(format!(
                "schedule covers {} steps but the stage runs {}",
                self.schedule.total_steps(),
                self.steps
            )));
        }
        self.curriculum.validate()?;
        if self.curriculum.total_steps != self.steps {
            return Err(Error::config(format!(
                "curriculum covers {} steps but the stage runs {}",
                self.curriculum.total_steps, self.steps
            )));
        }
        self.replacement.validate()?;
        self.optimizer.validate()
    }
}

/// Both stages, with the tokens-per-update rule checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStagePlan {
    pub stage1: StagePlan,
    pub stage2: StagePlan,
}

impl TwoStagePlan {
    /// Desk scale: 128-token sequences, then 1024 with an eighth of the
    /// batch.
    pub fn desk(stage1_steps: u64, stage2_steps: u64) -> Self {
        Self {
            stage1: StagePlan::stage1(128, 8, stage1_steps),
            stage2: StagePlan::stage2(1024, 1, stage2_steps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stage1.stage != Stage::I || self.stage2.stage != Stage::II {
            return Err(Error::config("stage plans must be ordered I then II"));
        }
        self.stage1.validate()?;
        self.stage2.validate()?;
        check_tokens_per_update(&self.stage1, &self.stage2)
    }
}

pub fn check_tokens_per_update(first: &StagePlan, second: &StagePlan) -> Result<()> {
    let (a, b) = (first.tokens_per_update() as f64, second.tokens_per_update() as f64);
    let change = (b / a - 1.0).abs();
    if change > TOKENS_PER_UPDATE_TOLERANCE + 1e-12 {
        return Err(Error::config(format!(
            "tokens per update change from {a} to {b} ({:.1}%), limit is {:.0}%",
            change * 100.0,
            TOKENS_PER_UPDATE_TOLERANCE * 100.0
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_plan_is_valid() {
        let p = TwoStagePlan::desk(200, 50);
        p.validate().unwrap();
        assert_eq!(p.stage1.tokens_per_update(), p.stage2.tokens_per_update());
    }

    #[test]
    fn tokens_per_update_rule() {
        let mut p = TwoStagePlan::desk(20, 10);
        p.stage2.batch_sequences = 2;
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        p.stage2.batch_sequences = 1;
        p.stage2.max_len = 1126;
        p.validate().unwrap();
        p.stage2.max_len = 1127;
        assert!(p.validate().is_err());
    }

    #[test]
    fn mismatched_schedule_length() {
        let mut p = StagePlan::stage1(16, 2, 10);
        p.steps = 11;
        assert!(p.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let p = TwoStagePlan::desk(40, 5);
        let text = toml::to_string(&p).unwrap();
        assert_eq!(toml::from_str::<TwoStagePlan>(&text).unwrap(), p);
    }
}
