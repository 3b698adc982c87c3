use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    #[default]
    Linear,
    /// Half-cosine easing between the same endpoints.
    Cosine,
}

/// Masking rate as a function of training progress: rises from `r_start` to
/// `r_peak` over the warmup fraction, then moves to `r_end` by the last step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskingCurriculum {
    pub warmup_fraction: f64,
    pub r_start: f64,
    pub r_peak: f64,
    pub r_end: f64,
    pub total_steps: u64,
    pub decay_shape: DecayShape,
}

impl Default for MaskingCurriculum {
    fn default() -> Self {
        Self {
            warmup_fraction: 0.04,
            r_start: 0.15,
            r_peak: 0.30,
            r_end: 0.15,
            total_steps: 1000,
            decay_shape: DecayShape::Linear,
        }
    }
}

/// `(1 - t) a + t b`, exact at both ends.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

impl MaskingCurriculum {
    /// A curriculum that stays at `rate` for the whole run.
    pub fn fixed(rate: f64, total_steps: u64) -> Self {
        Self {
            r_start: rate,
            r_peak: rate,
            r_end: rate,
            total_steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::config("masking.warmup_fraction must be in (0, 1)"));
        }
        for (name, r) in [("r_start", self.r_start), ("r_peak", self.r_peak), ("r_end", self.r_end)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::config(format!("masking.{name} must be in (0, 1]")));
            }
        }
        if self.r_start > self.r_peak {
            return Err(Error::config("masking.r_start must not exceed r_peak"));
        }
        if self.total_steps == 0 {
            return Err(Error::config("masking.total_steps must be positive"));
        }
        Ok(())
    }

    /// Step at which the peak rate is reached.
    pub fn warmup_steps(&self) -> u64 {
        ((self.warmup_fraction * self.total_steps as f64).round() as u64).clamp(1, self.total_steps)
    }

    pub fn rate(&self, step: u64) -> Result<f64> {
        if step > self.total_steps {
            return Err(Error::input(format!(
                "step {step} outside curriculum of {} steps",
                self.total_steps
            )));
        }
        let w = self.warmup_steps();
        if step <= w {
            return Ok(lerp(self.r_start, self.r_peak, step as f64 / w as f64));
        }
        let main = self.total_steps - w;
        let t = (step - w) as f64 / main as f64;
        let t = match self.decay_shape {
            DecayShape::Linear => t,
            DecayShape::Cosine => {
                if t == 1.0 {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * t).cos())
                }
            }
        };
        Ok(lerp(self.r_peak, self.r_end, t))
    }
}

pub fn curriculum_rate(c: &MaskingCurriculum, step: u64) -> Result<f64> {
    c.rate(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let c = MaskingCurriculum {
            total_steps: 1000,
            ..Default::default()
        };
        assert_eq!(c.warmup_steps(), 40);
        assert_eq!(c.rate(0).unwrap(), 0.15);
        assert_eq!(c.rate(40).unwrap(), 0.30);
        assert_eq!(c.rate(1000).unwrap(), 0.15);
        assert!((c.rate(520).unwrap() - 0.225).abs() < 1e-15);
        assert!((c.rate(20).unwrap() - 0.225).abs() < 1e-15);
    }

    #[test]
    fn cosine_shape_shares_endpoints() {
        let c = MaskingCurriculum {
            decay_shape: DecayShape::Cosine,
            ..Default::default()
        };
        assert_eq!(c.rate(c.warmup_steps()).unwrap(), 0.30);
        assert_eq!(c.rate(c.total_steps).unwrap(), 0.15);
        let mid = c.warmup_steps() + (c.total_steps - c.warmup_steps()) / 2;
        assert!((c.rate(mid).unwrap() - 0.225).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_step() {
        assert!(MaskingCurriculum::default().rate(1001).is_err());
    }

    #[test]
    fn validation() {
        assert!(MaskingCurriculum::default().validate().is_ok());
        let bad = MaskingCurriculum {
            warmup_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MaskingCurriculum {
            r_start: 0.4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
