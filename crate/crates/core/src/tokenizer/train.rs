//! Byte-pair-encoding training over pre-segmented words.
//!
//! Pairs are ranked by frequency; equal counts are broken by the
//! lexicographic order of the pair's token strings, which makes training a
//! pure function of the corpus.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::model::{unused_token, SpecialTokens, TokenizerModel};
use super::segment::{is_punctuation, DefaultSegmenter, Lexicon, Segmenter};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SizePolicy {
    Exact,
    #[default]
    RoundTo64,
}

pub const HARDWARE_MULTIPLE: usize = 64;

pub fn round_to_multiple(n: usize, multiple: usize) -> usize {
    n.div_ceil(multiple) * multiple
}

impl SizePolicy {
    pub fn resolve(self, target: usize) -> usize {
        match self {
            SizePolicy::Exact => target,
            SizePolicy::RoundTo64 => round_to_multiple(target, HARDWARE_MULTIPLE),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BpeTrainerConfig {
    pub target_size: usize,
    pub size_policy: SizePolicy,
    pub continuation_prefix: String,
    pub specials: SpecialTokens,
    /// Fraction of documents used for training, selected by a seeded hash
    /// of the document index.
    pub sample_fraction: f64,
}

impl Default for BpeTrainerConfig {
    fn default() -> Self {
        Self {
            target_size: 32_000,
            size_policy: SizePolicy::RoundTo64,
            continuation_prefix: "##".into(),
            specials: SpecialTokens::default(),
            sample_fraction: 1.0,
        }
    }
}

/// Trains with the default prefix and special tokens and no lexicon.
pub fn train_bpe<S: AsRef<str>>(
    corpus: &[S],
    target_size: usize,
    size_policy: SizePolicy,
) -> Result<TokenizerModel> {
    let cfg = BpeTrainerConfig {
        target_size,
        size_policy,
        ..Default::default()
    };
    BpeTrainer::new(cfg, Lexicon::default()).train(corpus, 0)
}

pub struct BpeTrainer {
    cfg: BpeTrainerConfig,
    lexicon: Lexicon,
}

type Pair = (u32, u32);
type PairKey = (Reverse<u64>, Rc<str>, Rc<str>, u32, u32);

struct Symbols {
    strings: Vec<Rc<str>>,
    ids: HashMap<Rc<str>, u32>,
}

impl Symbols {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.strings.len() as u32;
        let rc: Rc<str> = Rc::from(s);
        self.strings.push(rc.clone());
        self.ids.insert(rc, id);
        id
    }
}

struct PairIndex {
    counts: HashMap<Pair, u64>,
    ranked: BTreeSet<PairKey>,
    words_with: HashMap<Pair, BTreeSet<usize>>,
}

impl PairIndex {
    fn key(syms: &Symbols, pair: Pair, count: u64) -> PairKey {
        (
            Reverse(count),
            syms.strings[pair.0 as usize].clone(),
            syms.strings[pair.1 as usize].clone(),
            pair.0,
            pair.1,
        )
    }

    fn adjust(&mut self, syms: &Symbols, pair: Pair, delta: i64) {
        let old = self.counts.get(&pair).copied().unwrap_or(0);
        let new = (old as i64 + delta) as u64;
        if old > 0 {
            self.ranked.remove(&Self::key(syms, pair, old));
        }
        if new > 0 {
            self.ranked.insert(Self::key(syms, pair, new));
            self.counts.insert(pair, new);
        } else {
            self.counts.remove(&pair);
        }
    }
}

impl BpeTrainer {
    pub fn new(cfg: BpeTrainerConfig, lexicon: Lexicon) -> Self {
        Self { cfg, lexicon }
    }

    /// `seed` only matters when `sample_fraction < 1`.
    pub fn train<S: AsRef<str>>(&self, corpus: &[S], seed: u64) -> Result<TokenizerModel> {
        let cfg = &self.cfg;
        super::model::validate_prefix(&cfg.continuation_prefix)?;
        if corpus.is_empty() {
            return Err(Error::input("training corpus is empty"));
        }
        if !(cfg.sample_fraction > 0.0 && cfg.sample_fraction <= 1.0) {
            return Err(Error::config("sample_fraction must be in (0, 1]"));
        }
        let target = cfg.size_policy.resolve(cfg.target_size);
        let segmenter = DefaultSegmenter::new(self.lexicon.clone());
        let prefix = cfg.continuation_prefix.as_str();

        let sample_seed = seed::derive(seed, "tokenizer.sample");
        let mut word_counts: HashMap<&str, u64> = HashMap::new();
        for (i, doc) in corpus.iter().enumerate() {
            if cfg.sample_fraction < 1.0 {
                let u = (seed::mix64(sample_seed ^ i as u64) >> 11) as f64 / (1u64 << 53) as f64;
                if u >= cfg.sample_fraction {
                    continue;
                }
            }
            for w in segmenter.segment(doc.as_ref()) {
                *word_counts.entry(w).or_insert(0) += 1;
            }
        }
        if word_counts.is_empty() {
            return Err(Error::input("training corpus has no characters"));
        }
        let mut words: Vec<(&str, u64)> = word_counts.into_iter().collect();
        words.sort_unstable();

        // Base alphabet: word-initial form of every character, plus the
        // continuation form of every character that can occur inside a word.
        let mut alphabet: BTreeSet<String> = BTreeSet::new();
        for (w, _) in &words {
            for c in w.chars() {
                alphabet.insert(c.to_string());
                if !is_punctuation(c) {
                    alphabet.insert(format!("{prefix}{c}"));
                }
            }
        }
        let specials: Vec<String> = cfg.specials.as_list().iter().map(|s| s.to_string()).collect();
        let base = specials.len() + alphabet.len();
        if target < base {
            return Err(Error::config(format!(
                "target vocabulary {target} is below specials + alphabet ({base})"
            )));
        }

        let mut syms = Symbols {
            strings: Vec::new(),
            ids: HashMap::new(),
        };
        let mut vocab: Vec<String> = specials.clone();
        for s in &specials {
            syms.intern(s);
        }
        for a in &alphabet {
            syms.intern(a);
            vocab.push(a.clone());
        }

        let mut seqs: Vec<Vec<u32>> = Vec::with_capacity(words.len());
        let mut buf = String::new();
        for (w, _) in &words {
            let mut s = Vec::new();
            for (k, c) in w.chars().enumerate() {
                buf.clear();
                if k > 0 {
                    buf.push_str(prefix);
                }
                buf.push(c);
                s.push(syms.ids[buf.as_str()]);
            }
            seqs.push(s);
        }
        let freqs: Vec<u64> = words.iter().map(|&(_, n)| n).collect();

        let mut index = PairIndex {
            counts: HashMap::new(),
            ranked: BTreeSet::new(),
            words_with: HashMap::new(),
        };
        for (wi, s) in seqs.iter().enumerate() {
            for p in s.windows(2) {
                let pair = (p[0], p[1]);
                *index.counts.entry(pair).or_insert(0) += freqs[wi];
                index.words_with.entry(pair).or_default().insert(wi);
            }
        }
        let initial: Vec<(Pair, u64)> = index.counts.iter().map(|(&p, &c)| (p, c)).collect();
        for (p, c) in initial {
            index.ranked.insert(PairIndex::key(&syms, p, c));
        }

        let mut merges: Vec<(String, String)> = Vec::new();
        while vocab.len() < target {
            let Some(best) = index.ranked.iter().next().cloned() else {
                break;
            };
            let pair = (best.3, best.4);
            let left = best.1.to_string();
            let right = best.2.to_string();
            let merged = format!("{left}{}", &right[prefix.len()..]);
            let is_new = !syms.ids.contains_key(merged.as_str());
            let out = syms.intern(&merged);
            if is_new {
                vocab.push(merged);
            }
            merges.push((left, right));

            let affected = index.words_with.remove(&pair).unwrap_or_default();
            for wi in affected {
                let old = &seqs[wi];
                if !old.windows(2).any(|w| (w[0], w[1]) == pair) {
                    continue;
                }
                let f = freqs[wi] as i64;
                let mut new = Vec::with_capacity(old.len());
                let mut i = 0;
                while i < old.len() {
                    if i + 1 < old.len() && (old[i], old[i + 1]) == pair {
                        new.push(out);
                        i += 2;
                    } else {
                        new.push(old[i]);
                        i += 1;
                    }
                }
                for w in old.windows(2) {
                    index.adjust(&syms, (w[0], w[1]), -f);
                }
                for w in new.windows(2) {
                    let p = (w[0], w[1]);
                    index.adjust(&syms, p, f);
                    index.words_with.entry(p).or_default().insert(wi);
                }
                seqs[wi] = new;
            }
        }

        let learned = vocab.len();
        let unused = target - learned;
        if unused > 0 {
            log::info!("merges exhausted at {learned} tokens; reserving {unused} unused slots");
        }
        vocab.extend((0..unused).map(unused_token));
        TokenizerModel::new(
            vocab,
            merges,
            cfg.continuation_prefix.clone(),
            cfg.specials.clone(),
            unused,
            self.lexicon.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_policy() {
        assert_eq!(SizePolicy::RoundTo64.resolve(33_000), 33_024);
        assert_eq!(33_024, 64 * 516);
        assert_eq!(SizePolicy::RoundTo64.resolve(64), 64);
        assert_eq!(SizePolicy::Exact.resolve(33_000), 33_000);
    }

    #[test]
    fn most_frequent_pair_merges_first() {
        // Word "aaab" x2: pairs (a,##a)=2, (##a,##a)=2, (##a,##b)=2. All tie;
        // lexicographic order picks ("##a","##a") first ('#' < 'a').
        let m = train_bpe(&["aaab", "aaab"], 5 + 4 + 1, SizePolicy::Exact).unwrap();
        assert_eq!(m.merges()[0], ("##a".to_string(), "##a".to_string()));
        assert!(m.id("##aa").is_some());
    }

    #[test]
    fn single_char_corpus_has_no_merges() {
        let m = train_bpe(&["a"], 7, SizePolicy::Exact).unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(m.vocab_size(), 7);
        assert_eq!(&m.vocab()[5..], &["##a".to_string(), "a".to_string()]);
    }

    #[test]
    fn errors() {
        let empty: [&str; 0] = [];
        assert!(matches!(train_bpe(&empty, 100, SizePolicy::Exact), Err(Error::Input(_))));
        assert!(matches!(train_bpe(&["abc"], 6, SizePolicy::Exact), Err(Error::Config(_))));
    }

    #[test]
    fn pads_with_unused_when_merges_run_out() {
        let m = train_bpe(&["ab"], 100, SizePolicy::RoundTo64).unwrap();
        assert_eq!(m.vocab_size(), 128);
        assert!(m.unused_tokens() > 0);
        assert!(m.is_special(127));
    }

    #[test]
    fn sampling_is_seeded() {
        let docs: Vec<String> = (0..200).map(|i| format!("w{i} x{}", i % 7)).collect();
        let cfg = BpeTrainerConfig {
            target_size: 80,
            size_policy: SizePolicy::Exact,
            sample_fraction: 0.5,
            ..Default::default()
        };
        let t = BpeTrainer::new(cfg, Lexicon::default());
        assert_eq!(t.train(&docs, 1).unwrap(), t.train(&docs, 1).unwrap());
    }
}
