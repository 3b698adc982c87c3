use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::model::TokenizerModel;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};

/// Character-length buckets: each text is truncated to the bucket's limit
/// before measuring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "512")]
    Short512,
    #[serde(rename = "8192")]
    Long8192,
}

impl Bucket {
    pub fn char_limit(self) -> usize {
        match self {
            Bucket::Short512 => 512,
            Bucket::Long8192 => 8192,
        }
    }
}

impl FromStr for Bucket {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "512" | "short" => Ok(Bucket::Short512),
            "8192" | "8k" | "long" => Ok(Bucket::Long8192),
            other => Err(Error::config(format!("unknown bucket {other:?}; expected 512 or 8192"))),
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.char_limit())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionReport {
    pub chars_per_token: f64,
    pub token_count: u64,
    pub char_count: u64,
    pub bucket: Bucket,
}

/// Characters per token over all texts, each truncated to the bucket limit.
pub fn compression_stats<S: AsRef<str>>(
    model: &TokenizerModel,
    texts: &[S],
    bucket: Bucket,
) -> Result<CompressionReport> {
    if texts.is_empty() {
        return Err(Error::input("no texts to measure"));
    }
    let limit = bucket.char_limit();
    let mut chars = 0u64;
    let mut tokens = 0u64;
    for t in texts {
        let t = t.as_ref();
        let end = t.char_indices().nth(limit).map_or(t.len(), |(i, _)| i);
        let clipped = &t[..end];
        chars += clipped.chars().count() as u64;
        tokens += model.encode(clipped).len() as u64;
    }
    if chars == 0 {
        return Err(Error::input("all texts are empty"));
    }
    Ok(CompressionReport {
        chars_per_token: chars as f64 / tokens as f64,
        token_count: tokens,
        char_count: chars,
        bucket,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetReport {
    pub total_params: u64,
    pub embedding_params: u64,
    pub embedding_share: f64,
    /// Whether the MLM output projection reuses the embedding matrix. When
    /// untied, the separate decoder counts toward the total but not toward
    /// `embedding_params`.
    pub tied_embeddings: bool,
}

impl BudgetReport {
    pub fn from_counts(embedding_params: u64, total_params: u64, tied_embeddings: bool) -> Self {
        let embedding_share = if total_params == 0 {
            0.0
        } else {
            embedding_params as f64 / total_params as f64
        };
        Self {
            total_params,
            embedding_params,
            embedding_share,
            tied_embeddings,
        }
    }
}

/// Exact parameter count of an encoder with `vocab_size` tokens.
pub fn budget_report(vocab_size: usize, config: &EncoderConfig) -> Result<BudgetReport> {
    let cfg = EncoderConfig {
        vocab_size,
        ..config.clone()
    };
    cfg.validate_shape()?;
    let total: u64 = cfg
        .param_shapes()
        .iter()
        .map(|(_, shape)| shape.iter().product::<usize>() as u64)
        .sum();
    let embedding = (vocab_size * cfg.hidden) as u64;
    Ok(BudgetReport::from_counts(embedding, total, cfg.tie_embeddings))
}
