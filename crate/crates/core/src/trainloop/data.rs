use crate::corpus::{DocRef, MixtureSampler};
use crate::error::{Error, Result};
use crate::tokenizer::{TokenizerModel, CLS_ID, SEP_ID};

/// Tokenized documents per source with their mixture ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainData {
    pub ratios: Vec<f64>,
    pub docs: Vec<Vec<Vec<u32>>>,
}

impl TrainData {
    pub fn tokenize<S: AsRef<str>>(sources: &[Vec<S>], ratios: &[f64], tokenizer: &TokenizerModel) -> Result<Self> {
        if sources.len() != ratios.len() {
            return Err(Error::config(format!("{} sources for {} ratios", sources.len(), ratios.len())));
        }
        let docs = sources
            .iter()
            .map(|docs| docs.iter().map(|d| tokenizer.encode(d.as_ref())).collect())
            .collect();
        Ok(Self {
            ratios: ratios.to_vec(),
            docs,
        })
    }

    /// Sampler over sequence lengths as they will be fed at `max_len`.
    pub fn sampler(&self, max_len: usize) -> Result<MixtureSampler> {
        let lengths = self
            .docs
            .iter()
            .map(|src| src.iter().map(|d| (d.len() + 2).min(max_len)).collect())
            .collect();
        MixtureSampler::new(&self.ratios, lengths)
    }

    /// `[CLS] doc [SEP]`, with the document cut to fit `max_len`.
    pub fn sequence(&self, r: DocRef, max_len: usize) -> Vec<u32> {
        wrap(&self.docs[r.source][r.doc], max_len)
    }
}

pub fn wrap(doc: &[u32], max_len: usize) -> Vec<u32> {
    let body = &doc[..doc.len().min(max_len.saturating_sub(2))];
    let mut seq = Vec::with_capacity(body.len() + 2);
    seq.push(CLS_ID);
    seq.extend_from_slice(body);
    seq.push(SEP_ID);
    seq
}

/// Greedy fill of a flat buffer of `budget` tokens in the given order. The
/// first sequence that does not fit is cut to the remaining space (keeping
/// its final `[SEP]`) when at least three tokens remain, and packing stops.
pub fn pack_greedy(seqs: Vec<Vec<u32>>, budget: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut used = 0;
    for mut s in seqs {
        let room = budget - used;
        if s.len() <= room {
            used += s.len();
            out.push(s);
            if used == budget {
                break;
            }
            continue;
        }
        if room >= 3 {
            let sep = *s.last().unwrap();
            s.truncate(room - 1);
            s.push(sep);
            out.push(s);
        }
        break;
    }
    out
}
