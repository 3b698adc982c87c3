use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{correlate, CorrelationReport};
use crate::encoder::{Checkpoint, PackedBatch};
use crate::error::{Error, IoContext, Result};
use crate::tokenizer::TokenizerModel;
use crate::trainloop::wrap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Mean of final hidden states over non-special positions.
    #[default]
    Mean,
    /// Final hidden state at the `[CLS]` position.
    Cls,
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "cls" => Ok(Pooling::Cls),
            other => Err(Error::config(format!("unknown pooling `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StsPair {
    pub a: String,
    pub b: String,
    pub gold: f64,
}

/// Tab-separated `textA, textB, gold`, one pair per line.
pub fn parse_pairs(text: &str) -> Result<Vec<StsPair>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::input(format!("pairs line {}: expected 3 tab-separated fields", i + 1)));
            }
            let gold = f[2]
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("pairs line {}: gold score `{}` is not a number", i + 1, f[2])))?;
            Ok(StsPair {
                a: f[0].to_string(),
                b: f[1].to_string(),
                gold,
            })
        })
        .collect()
}

pub fn read_pairs(path: &Path) -> Result<Vec<StsPair>> {
    parse_pairs(&fs::read_to_string(path).at(path)?)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

/// One embedding per text.
pub fn embed<S: AsRef<str>>(
    ckpt: &Checkpoint,
    tokenizer: &TokenizerModel,
    texts: &[S],
    pooling: Pooling,
) -> Result<Vec<Vec<f64>>> {
    let seqs: Vec<Vec<u32>> = texts
        .iter()
        .map(|t| wrap(&tokenizer.encode(t.as_ref()), ckpt.config.max_context))
        .collect();
    if let Some(i) = seqs.iter().position(|s| s.len() <= 2) {
        return Err(Error::input(format!("text {i} produced no tokens")));
    }
    let batch = PackedBatch::from_sequences(&seqs)?;
    let hidden = ckpt.forward(&batch)?.hidden;
    Ok(batch
        .sequences()
        .map(|r| match pooling {
            Pooling::Cls => hidden.row(r.start).to_vec(),
            Pooling::Mean => {
                let inner = hidden.slice(ndarray::s![r.start + 1..r.end - 1, ..]);
                inner.mean_axis(ndarray::Axis(0)).unwrap().to_vec()
            }
        })
        .collect())
}

/// Cosine similarity per pair, correlated against the gold scores.
pub fn sts_score(
    ckpt: &Checkpoint,
    tokenizer: &TokenizerModel,
    pairs: &[StsPair],
    pooling: Pooling,
) -> Result<(CorrelationReport, Vec<f64>)> {
    if pairs.len() < 2 {
        return Err(Error::input("at least two pairs are needed"));
    }
    let mut cosines = Vec::with_capacity(pairs.len());
    for p in pairs {
        let e = embed(ckpt, tokenizer, &[&p.a, &p.b], pooling)?;
        cosines.push(cosine(&e[0], &e[1]));
    }
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    Ok((correlate(&cosines, &gold)?, cosines))
}
