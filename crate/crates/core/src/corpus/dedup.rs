use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minhash::{MinHashSignature, MinHasher};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub threshold: f64,
    pub num_perm: usize,
    pub shingle_size: usize,
    pub bands: usize,
    pub rows: usize,
    /// Candidates within this distance below the threshold are logged.
    pub near_miss_margin: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            threshold: 0.8,
            num_perm: 128,
            shingle_size: 5,
            bands: 32,
            rows: 4,
            near_miss_margin: 0.1,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::config(format!("dedup threshold {} must lie in (0, 1]", self.threshold)));
        }
        if self.shingle_size == 0 || self.bands == 0 || self.rows == 0 {
            return Err(Error::config("dedup shingle_size, bands and rows must be positive"));
        }
        if self.bands * self.rows != self.num_perm {
            return Err(Error::config(format!(
                "dedup bands x rows = {} must equal num_perm {}",
                self.bands * self.rows,
                self.num_perm
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DropRecord {
    pub index: usize,
    /// Earliest kept document it matched.
    pub duplicate_of: usize,
    pub similarity: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DedupOutcome {
    pub kept: Vec<usize>,
    pub dropped: Vec<DropRecord>,
    /// LSH candidates whose estimated similarity fell just short.
    pub near_misses: Vec<DropRecord>,
}

/// Drops later near-duplicates, keeping first occurrences. Only kept
/// documents act as references. Deterministic given input order and seed.
pub fn dedup<S: AsRef<str> + Sync>(docs: &[S], cfg: &DedupConfig, seed: u64) -> Result<DedupOutcome> {
    cfg.validate()?;
    let hasher = MinHasher::new(cfg.num_perm, cfg.shingle_size, seed);
    let sigs: Vec<MinHashSignature> = docs.par_iter().map(|d| hasher.signature(d.as_ref())).collect();

    let mut buckets: Vec<HashMap<&[u64], Vec<usize>>> = vec![HashMap::new(); cfg.bands];
    let mut out = DedupOutcome::default();
    for (i, sig) in sigs.iter().enumerate() {
        let mut candidates: Vec<usize> = Vec::new();
        for (b, table) in buckets.iter().enumerate() {
            let band = &sig.values[b * cfg.rows..(b + 1) * cfg.rows];
            if let Some(ids) = table.get(band) {
                candidates.extend(ids);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();

        let mut hit = None;
        for &c in &candidates {
            let sim = sig.jaccard(&sigs[c]);
            if sim >= cfg.threshold {
                hit = Some(DropRecord {
                    index: i,
                    duplicate_of: c,
                    similarity: sim,
                });
                break;
            }
            if sim >= cfg.threshold - cfg.near_miss_margin {
                log::debug!("near miss: doc {i} vs {c} at {sim:.3}");
                out.near_misses.push(DropRecord {
                    index: i,
                    duplicate_of: c,
                    similarity: sim,
                });
            }
        }
        match hit {
            Some(rec) => out.dropped.push(rec),
            None => {
                for (b, table) in buckets.iter_mut().enumerate() {
                    table.entry(&sig.values[b * cfg.rows..(b + 1) * cfg.rows]).or_default().push(i);
                }
                out.kept.push(i);
            }
        }
    }
    Ok(out)
}
