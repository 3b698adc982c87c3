use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DocRef {
    pub source: usize,
    pub doc: usize,
}

/// Samples documents so that each source's expected share of tokens equals
/// its ratio. A source is picked with probability proportional to
/// `ratio / mean_length`, then a document uniformly within it, with
/// replacement. Draws depend only on `(seed, step)`.
#[derive(Clone, Debug)]
pub struct MixtureSampler {
    lengths: Vec<Vec<usize>>,
    probs: Vec<f64>,
    pick: WeightedIndex<f64>,
}

impl MixtureSampler {
    /// `lengths[s][d]` is the token length of document `d` of source `s`.
    pub fn new(ratios: &[f64], lengths: Vec<Vec<usize>>) -> Result<Self> {
        if ratios.len() != lengths.len() || ratios.is_empty() {
            return Err(Error::config(format!(
                "{} ratios for {} sources",
                ratios.len(),
                lengths.len()
            )));
        }
        let mut weights = Vec::with_capacity(ratios.len());
        for (s, (&r, lens)) in ratios.iter().zip(&lengths).enumerate() {
            if lens.is_empty() {
                return Err(Error::config(format!("source {s} has no documents")));
            }
            let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
            if mean == 0.0 {
                return Err(Error::config(format!("source {s} has only empty documents")));
            }
            weights.push(r / mean);
        }
        let total: f64 = weights.iter().sum();
        let pick = WeightedIndex::new(&weights).map_err(|e| Error::config(format!("mixture weights: {e}")))?;
        Ok(Self {
            lengths,
            probs: weights.iter().map(|w| w / total).collect(),
            pick,
        })
    }

    /// Probability that one draw comes from each source.
    pub fn source_probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean_lengths(&self) -> Vec<f64> {
        self.lengths
            .iter()
            .map(|l| l.iter().sum::<usize>() as f64 / l.len() as f64)
            .collect()
    }

    /// Expected token share of each source: equals the normalized ratios.
    pub fn expected_shares(&self) -> Vec<f64> {
        let mass: Vec<f64> = self.probs.iter().zip(self.mean_lengths()).map(|(p, m)| p * m).collect();
        let total: f64 = mass.iter().sum();
        mass.iter().map(|m| m / total).collect()
    }

    pub fn length(&self, r: DocRef) -> usize {
        self.lengths[r.source][r.doc]
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> DocRef {
        let source = self.pick.sample(rng);
        let doc = rng.random_range(0..self.lengths[source].len());
        DocRef { source, doc }
    }

    /// Documents for one step, drawn until their lengths reach
    /// `batch_tokens` (at least one document).
    pub fn sample(&self, batch_tokens: usize, seed: u64, step: u64) -> Vec<DocRef> {
        let mut rng = seed::rng(seed::derive_indexed(seed, "corpus.mixture", step));
        let mut out = Vec::new();
        let mut tokens = 0;
        loop {
            let r = self.draw(&mut rng);
            tokens += self.length(r);
            out.push(r);
            if tokens >= batch_tokens {
                return out;
            }
        }
    }
}

pub fn mixture_sampler(
    ratios: &[f64],
    lengths: Vec<Vec<usize>>,
    batch_tokens: usize,
    seed: u64,
    step: u64,
) -> Result<Vec<DocRef>> {
    Ok(MixtureSampler::new(ratios, lengths)?.sample(batch_tokens, seed, step))
}
