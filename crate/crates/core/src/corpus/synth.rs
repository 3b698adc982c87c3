//! Seeded synthetic Chinese-like text for fixtures and desk-scale runs.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::seed;
use crate::tokenizer::Lexicon;

const CJK_BASE: u32 = 0x4E00;

/// A Zipf-weighted vocabulary of one- to four-character words.
#[derive(Clone, Debug)]
pub struct SynthLanguage {
    pub words: Vec<String>,
    weights: WeightedIndex<f64>,
}

impl SynthLanguage {
    pub fn new(num_words: usize, num_chars: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed::derive(seed, "synth.language"));
        let chars: Vec<char> = (0..num_chars.max(1) as u32)
            .map(|i| char::from_u32(CJK_BASE + i).unwrap())
            .collect();
        let lens = WeightedIndex::new([30.0, 50.0, 15.0, 5.0]).unwrap();
        let mut words = Vec::with_capacity(num_words);
        let mut seen = std::collections::HashSet::new();
        while words.len() < num_words.max(1) {
            let n = lens.sample(&mut rng) + 1;
            let w: String = (0..n).map(|_| *chars.choose(&mut rng).unwrap()).collect();
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        let weights = WeightedIndex::new((0..words.len()).map(|r| 1.0 / (r as f64 + 1.0))).unwrap();
        Self { words, weights }
    }

    /// Multi-character words, for the segmenter.
    pub fn lexicon(&self) -> Lexicon {
        let mut lex = Lexicon::default();
        for w in &self.words {
            lex.insert(w.clone());
        }
        lex
    }

    /// Roughly `chars` characters of sentences. `topic` rotates word ranks
    /// so that different sources have different frequent words.
    pub fn document(&self, rng: &mut ChaCha8Rng, chars: usize, topic: usize) -> String {
        let mut doc = String::new();
        let mut count = 0;
        while count < chars {
            let sentence_words = rng.random_range(4..14);
            for i in 0..sentence_words {
                let w = if rng.random_bool(0.02) {
                    let n: u32 = rng.random_range(1..3000);
                    n.to_string()
                } else {
                    let r = (self.weights.sample(rng) + topic) % self.words.len();
                    self.words[r].clone()
                };
                count += w.chars().count();
                doc.push_str(&w);
                if i + 1 < sentence_words && rng.random_bool(0.1) {
                    doc.push('，');
                    count += 1;
                }
            }
            doc.push('。');
            count += 1;
        }
        doc
    }
}

#[derive(Clone, Debug)]
pub struct SynthSource {
    pub name: String,
    pub docs: usize,
    pub mean_chars: usize,
}

/// Documents per source. With probability `dup_rate` a document is a
/// lightly edited copy of an earlier one from the same source.
pub fn synth_corpus(lang: &SynthLanguage, sources: &[SynthSource], dup_rate: f64, seed: u64) -> Vec<Vec<String>> {
    sources
        .iter()
        .enumerate()
        .map(|(si, src)| {
            let mut rng = seed::rng(seed::derive_indexed(seed, "synth.source", si as u64));
            let mut docs: Vec<String> = Vec::with_capacity(src.docs);
            for _ in 0..src.docs {
                if !docs.is_empty() && rng.random_bool(dup_rate) {
                    let base = docs[rng.random_range(0..docs.len())].clone();
                    docs.push(perturb(&base, 0.005, lang, &mut rng));
                } else {
                    let n = rng.random_range(src.mean_chars / 2..=src.mean_chars * 3 / 2);
                    docs.push(lang.document(&mut rng, n, si * 7));
                }
            }
            docs
        })
        .collect()
}

/// Replaces roughly `rate` of the characters with characters from the
/// language's words.
pub fn perturb(doc: &str, rate: f64, lang: &SynthLanguage, rng: &mut ChaCha8Rng) -> String {
    doc.chars()
        .map(|c| {
            if rng.random_bool(rate) {
                lang.words.choose(rng).and_then(|w| w.chars().next()).unwrap_or(c)
            } else {
                c
            }
        })
        .collect()
}
