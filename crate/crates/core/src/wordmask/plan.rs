use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grouping::WordGrouping;
use crate::error::{Error, Result};
use crate::seed;

/// What happens to the input at a masked position. The label is always the
/// original token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Replacement {
    MaskToken,
    RandomToken,
    Keep,
}

/// Probabilities of the three replacement kinds; must sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplacementPolicy {
    pub mask: f64,
    pub random: f64,
    pub keep: f64,
}

impl Default for ReplacementPolicy {
    fn default() -> Self {
        Self {
            mask: 0.8,
            random: 0.1,
            keep: 0.1,
        }
    }
}

impl ReplacementPolicy {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.mask, self.random, self.keep];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("masking replacement probabilities must be in [0,1] and sum to 1"));
        }
        Ok(())
    }

    fn draw(&self, u: f64) -> Replacement {
        if u < self.mask {
            Replacement::MaskToken
        } else if u < self.mask + self.random {
            Replacement::RandomToken
        } else {
            Replacement::Keep
        }
    }
}

/// A concrete mask for one sequence. `masked_positions` is sorted and is a
/// union of whole spans from the grouping it was realized from.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskingPlan {
    pub masked_positions: Vec<usize>,
    pub replacement: Vec<Replacement>,
    pub realized_rate: f64,
}

impl MaskingPlan {
    pub fn empty() -> Self {
        Self {
            masked_positions: Vec::new(),
            replacement: Vec::new(),
            realized_rate: 0.0,
        }
    }

    /// Model inputs and per-position labels. Labels are `Some(original)`
    /// exactly on masked positions.
    pub fn apply(
        &self,
        tokens: &[u32],
        mask_id: u32,
        random_ids: Range<u32>,
        seed: u64,
    ) -> (Vec<u32>, Vec<Option<u32>>) {
        let mut rng = seed::rng(seed);
        let mut inputs = tokens.to_vec();
        let mut labels = vec![None; tokens.len()];
        for (&pos, &rep) in self.masked_positions.iter().zip(&self.replacement) {
            labels[pos] = Some(tokens[pos]);
            match rep {
                Replacement::MaskToken => inputs[pos] = mask_id,
                Replacement::RandomToken if !random_ids.is_empty() => {
                    inputs[pos] = rng.random_range(random_ids.clone())
                }
                _ => {}
            }
        }
        (inputs, labels)
    }
}

/// Selects whole spans in seeded random order until the masked share of
/// maskable positions first reaches `rate`.
pub fn realize_mask(
    grouping: &WordGrouping,
    rate: f64,
    rng_seed: u64,
    policy: &ReplacementPolicy,
) -> Result<MaskingPlan> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::input(format!("masking rate {rate} outside (0, 1]")));
    }
    let maskable = grouping.maskable_positions();
    if maskable == 0 {
        return Ok(MaskingPlan::empty());
    }
    let mut rng = seed::rng(rng_seed);
    let mut order: Vec<usize> = (0..grouping.groups.len()).collect();
    order.shuffle(&mut rng);

    let mut chosen: Vec<usize> = Vec::new();
    let mut masked = 0usize;
    for g in order {
        if masked as f64 / maskable as f64 + 1e-12 >= rate {
            break;
        }
        masked += grouping.groups[g].len();
        chosen.push(g);
    }
    chosen.sort_unstable();
    let masked_positions: Vec<usize> = chosen.iter().flat_map(|&g| grouping.groups[g].clone()).collect();
    let replacement = masked_positions
        .iter()
        .map(|_| policy.draw(rng.random::<f64>()))
        .collect();
    Ok(MaskingPlan {
        realized_rate: masked as f64 / maskable as f64,
        masked_positions,
        replacement,
    })
}
