//! Whole-word masking: span grouping over `##` subwords, the warmup/decay
//! masking-rate curriculum, and seeded per-sequence mask realization.

mod curriculum;
mod grouping;
mod plan;

pub use curriculum::{curriculum_rate, DecayShape, MaskingCurriculum};
pub use grouping::{group_words, WordGrouping};
pub use plan::{realize_mask, MaskingPlan, Replacement, ReplacementPolicy};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Token-level masking treats every non-special token as its own word; it
/// exists for the masking-strategy ablation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaskingUnit {
    #[default]
    WholeWord,
    Token,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MaskingConfig {
    pub unit: MaskingUnit,
    pub curriculum: MaskingCurriculum,
    pub replacement: ReplacementPolicy,
}

impl MaskingConfig {
    pub fn validate(&self) -> Result<()> {
        self.curriculum.validate()?;
        self.replacement.validate()
    }
}

/// Splits every span into single-token spans.
pub fn token_level(grouping: &WordGrouping) -> WordGrouping {
    WordGrouping {
        groups: grouping
            .groups
            .iter()
            .flat_map(|g| g.clone().map(|i| i..i + 1))
            .collect(),
    }
}
