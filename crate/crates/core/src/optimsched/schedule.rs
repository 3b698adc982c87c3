use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Linear ramp from `eta_min` up to `eta_max`.
    WarmupRamp,
    DampedCosine,
    /// Linear decay from `eta_max` down to `eta_min`.
    Stage2Linear,
    /// Warmup, stable plateau, linear decay.
    Wsd,
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warmup_ramp" | "warmup" => Ok(Phase::WarmupRamp),
            "damped_cosine" => Ok(Phase::DampedCosine),
            "stage2_linear" | "stage2" => Ok(Phase::Stage2Linear),
            "wsd" => Ok(Phase::Wsd),
            other => Err(Error::config(format!("unknown schedule kind `{other}`"))),
        }
    }
}

/// One schedule phase. A pure function of `(config, step)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub phase: Phase,
    pub eta_max: f64,
    pub eta_min: f64,
    pub cycles: u32,
    pub damping_gamma: f64,
    pub total_steps: u64,
    /// Wsd only: fraction of steps spent warming up.
    pub wsd_warmup_fraction: f64,
    /// Wsd only: fraction of steps spent in the final decay.
    pub wsd_decay_fraction: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            phase: Phase::DampedCosine,
            eta_max: 8e-4,
            eta_min: 5e-5,
            cycles: 3,
            damping_gamma: 0.1,
            total_steps: 1000,
            wsd_warmup_fraction: 0.04,
            wsd_decay_fraction: 0.2,
        }
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

impl ScheduleConfig {
    pub fn damped_cosine(total_steps: u64) -> Self {
        Self {
            total_steps,
            ..Self::default()
        }
    }

    /// 5e-5 up to 8e-4.
    pub fn warmup(total_steps: u64) -> Self {
        Self {
            phase: Phase::WarmupRamp,
            total_steps,
            ..Self::default()
        }
    }

    /// 1e-4 down to 5e-5.
    pub fn stage2(total_steps: u64) -> Self {
        Self {
            phase: Phase::Stage2Linear,
            eta_max: 1e-4,
            eta_min: 5e-5,
            total_steps,
            ..Self::default()
        }
    }

    pub fn wsd(total_steps: u64) -> Self {
        Self {
            phase: Phase::Wsd,
            total_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta_max, self.eta_min, self.damping_gamma].iter().all(|v| v.is_finite());
        if !finite || self.eta_min < 0.0 {
            return Err(Error::config("schedule rates must be finite and non-negative"));
        }
        if self.eta_min >= self.eta_max {
            return Err(Error::config(format!(
                "schedule eta_min {} must be below eta_max {}",
                self.eta_min, self.eta_max
            )));
        }
        if self.cycles == 0 {
            return Err(Error::config("schedule cycles must be at least 1"));
        }
        if self.total_steps == 0 {
            return Err(Error::config("schedule total_steps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.damping_gamma) {
            return Err(Error::config("schedule damping_gamma must lie in [0, 1]"));
        }
        let (w, d) = (self.wsd_warmup_fraction, self.wsd_decay_fraction);
        if !(0.0..=1.0).contains(&w) || !(0.0..=1.0).contains(&d) || w + d > 1.0 {
            return Err(Error::config("wsd fractions must be in [0, 1] and sum to at most 1"));
        }
        Ok(())
    }

    fn progress(&self, step: u64) -> Result<f64> {
        self.validate()?;
        if step > self.total_steps {
            return Err(Error::input(format!(
                "step {step} outside schedule of {} steps",
                self.total_steps
            )));
        }
        Ok(step as f64 / self.total_steps as f64)
    }

    fn expect(&self, phase: Phase) -> Result<()> {
        if self.phase != phase {
            return Err(Error::config(format!("schedule phase is {:?}, expected {phase:?}", self.phase)));
        }
        Ok(())
    }

    /// Upper envelope of the damped cosine at progress `p`.
    pub fn peak(&self, p: f64) -> f64 {
        self.eta_max * (1.0 - (1.0 - self.damping_gamma) * p)
    }

    /// Lower envelope of the damped cosine at progress `p`.
    pub fn valley(&self, p: f64) -> f64 {
        self.eta_max / 2.0 * (1.0 - p) + self.eta_min * p
    }

    /// Learning rate at `step` for whichever phase this config describes.
    pub fn eta(&self, step: u64) -> Result<f64> {
        let p = self.progress(step)?;
        Ok(match self.phase {
            Phase::WarmupRamp => lerp(self.eta_min, self.eta_max, p),
            Phase::Stage2Linear => lerp(self.eta_max, self.eta_min, p),
            Phase::DampedCosine => {
                let (peak, valley) = (self.peak(p), self.valley(p));
                let c = (PI * (2 * self.cycles - 1) as f64 * p).cos();
                // Same value as (P+V)/2 + (P-V)/2 cos, arranged so both
                // endpoints come out exact.
                valley + (peak - valley) * (1.0 + c) / 2.0
            }
            Phase::Wsd => {
                let (w, d) = (self.wsd_warmup_fraction, self.wsd_decay_fraction);
                if w > 0.0 && p < w {
                    lerp(self.eta_min, self.eta_max, p / w)
                } else if d > 0.0 && p > 1.0 - d {
                    lerp(self.eta_min, self.eta_max, (1.0 - p) / d)
                } else {
                    self.eta_max
                }
            }
        })
    }
}

pub fn damped_cosine_eta(cfg: &ScheduleConfig, step: u64) -> Result<f64> {
    cfg.expect(Phase::DampedCosine)?;
    cfg.eta(step)
}

pub fn warmup_eta(cfg: &ScheduleConfig, step: u64) -> Result<f64> {
    cfg.expect(Phase::WarmupRamp)?;
    cfg.eta(step)
}

pub fn stage2_eta(cfg: &ScheduleConfig, step: u64) -> Result<f64> {
    cfg.expect(Phase::Stage2Linear)?;
    cfg.eta(step)
}

pub fn wsd_eta(cfg: &ScheduleConfig, step: u64) -> Result<f64> {
    cfg.expect(Phase::Wsd)?;
    cfg.eta(step)
}

/// Phases run back to back. The last step of one segment coincides with
/// step 0 of the next, which takes precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub segments: Vec<ScheduleConfig>,
}

impl Schedule {
    pub fn single(cfg: ScheduleConfig) -> Self {
        Self { segments: vec![cfg] }
    }

    /// Warmup over `warmup_steps` followed by `main`.
    pub fn with_warmup(warmup_steps: u64, main: ScheduleConfig) -> Self {
        let mut segments = Vec::new();
        if warmup_steps > 0 {
            segments.push(ScheduleConfig {
                phase: Phase::WarmupRamp,
                eta_max: main.eta_max,
                total_steps: warmup_steps,
                ..ScheduleConfig::default()
            });
        }
        segments.push(main);
        Self { segments }
    }

    pub fn total_steps(&self) -> u64 {
        self.segments.iter().map(|s| s.total_steps).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::config("schedule has no segments"));
        }
        self.segments.iter().try_for_each(ScheduleConfig::validate)
    }

    pub fn eta(&self, step: u64) -> Result<f64> {
        self.validate()?;
        let mut start = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            let last = i + 1 == self.segments.len();
            if step < start + seg.total_steps || (last && step == start + seg.total_steps) {
                return seg.eta(step - start);
            }
            start += seg.total_steps;
        }
        Err(Error::input(format!(
            "step {step} outside schedule of {} steps",
            self.total_steps()
        )))
    }
}
