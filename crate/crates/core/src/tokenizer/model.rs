use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::segment::{is_punctuation, DefaultSegmenter, Lexicon, Segmenter};
use crate::error::{Error, Result};

/// Reserved token strings. They always occupy ids 0..5 in this order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecialTokens {
    pub pad: String,
    pub unk: String,
    pub cls: String,
    pub sep: String,
    pub mask: String,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        Self {
            pad: "[PAD]".into(),
            unk: "[UNK]".into(),
            cls: "[CLS]".into(),
            sep: "[SEP]".into(),
            mask: "[MASK]".into(),
        }
    }
}

impl SpecialTokens {
    pub fn as_list(&self) -> [&str; 5] {
        [&self.pad, &self.unk, &self.cls, &self.sep, &self.mask]
    }
}

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;
pub const NUM_SPECIALS: usize = 5;

pub fn unused_token(i: usize) -> String {
    format!("[unused{i}]")
}

/// Result of encoding, with the number of characters that fell outside the
/// alphabet and were mapped to the unknown token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub unknown_chars: usize,
}

/// A trained BPE vocabulary.
///
/// Tokens that do not start a word carry `continuation_prefix`. The five
/// special tokens come first, then the learned vocabulary, then
/// `unused_tokens` reserved `[unusedN]` entries that pad the vocabulary up to
/// its size policy.
#[derive(Clone, Debug)]
pub struct TokenizerModel {
    vocab: Vec<String>,
    token_to_id: HashMap<String, u32>,
    merges: Vec<(String, String)>,
    merge_table: HashMap<(u32, u32), (u32, u32)>,
    continuation_prefix: String,
    specials: SpecialTokens,
    unused_tokens: usize,
    segmenter: DefaultSegmenter,
}

impl PartialEq for TokenizerModel {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.merges == other.merges
            && self.continuation_prefix == other.continuation_prefix
            && self.specials == other.specials
            && self.unused_tokens == other.unused_tokens
            && self.segmenter == other.segmenter
    }
}

impl TokenizerModel {
    /// Builds a model and checks its invariants.
    pub fn new(
        vocab: Vec<String>,
        merges: Vec<(String, String)>,
        continuation_prefix: String,
        specials: SpecialTokens,
        unused_tokens: usize,
        lexicon: Lexicon,
    ) -> Result<Self> {
        validate_prefix(&continuation_prefix)?;
        if vocab.len() < NUM_SPECIALS + unused_tokens {
            return Err(Error::config("vocabulary smaller than its reserved tokens"));
        }
        for (i, s) in specials.as_list().iter().enumerate() {
            if vocab[i] != *s {
                return Err(Error::config(format!(
                    "special token {s:?} must have id {i}, found {:?}",
                    vocab[i]
                )));
            }
            if s.starts_with(&continuation_prefix) {
                return Err(Error::config(format!(
                    "special token {s:?} carries the continuation prefix"
                )));
            }
        }
        let mut token_to_id = HashMap::with_capacity(vocab.len());
        for (i, tok) in vocab.iter().enumerate() {
            if tok.is_empty() || tok == &continuation_prefix {
                return Err(Error::config(format!("empty token at id {i}")));
            }
            if token_to_id.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::config(format!("duplicate token {tok:?}")));
            }
        }
        let first_unused = vocab.len() - unused_tokens;
        for (k, tok) in vocab[first_unused..].iter().enumerate() {
            if *tok != unused_token(k) {
                return Err(Error::config(format!(
                    "expected reserved token {:?}, found {tok:?}",
                    unused_token(k)
                )));
            }
        }
        let mut model = Self {
            vocab,
            token_to_id,
            merges: Vec::new(),
            merge_table: HashMap::new(),
            continuation_prefix,
            specials,
            unused_tokens,
            segmenter: DefaultSegmenter::new(lexicon),
        };
        model.set_merges(merges)?;
        Ok(model)
    }

    fn set_merges(&mut self, merges: Vec<(String, String)>) -> Result<()> {
        let mut table = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let lookup = |t: &str| {
                self.token_to_id
                    .get(t)
                    .copied()
                    .ok_or_else(|| Error::config(format!("merge {rank} uses unknown token {t:?}")))
            };
            let l = lookup(left)?;
            let r = lookup(right)?;
            let body = right.strip_prefix(&self.continuation_prefix).ok_or_else(|| {
                Error::config(format!("merge {rank}: right side {right:?} is not a continuation"))
            })?;
            let out = lookup(&format!("{left}{body}"))?;
            // Only the first (lowest-rank) rule for a pair is ever applied.
            table.entry((l, r)).or_insert((rank as u32, out));
        }
        self.merges = merges;
        self.merge_table = table;
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.continuation_prefix
    }

    pub fn specials(&self) -> &SpecialTokens {
        &self.specials
    }

    pub fn unused_tokens(&self) -> usize {
        self.unused_tokens
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.segmenter.lexicon
    }

    pub fn segmenter(&self) -> &DefaultSegmenter {
        &self.segmenter
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Specials and `[unusedN]` reservations.
    pub fn is_special(&self, id: u32) -> bool {
        let id = id as usize;
        id < NUM_SPECIALS || id >= self.vocab.len() - self.unused_tokens
    }

    pub fn is_continuation(&self, id: u32) -> bool {
        !self.is_special(id)
            && self
                .vocab
                .get(id as usize)
                .is_some_and(|t| t.starts_with(&self.continuation_prefix))
    }

    /// Ids that may be drawn as random replacements during masking.
    pub fn regular_id_range(&self) -> std::ops::Range<u32> {
        NUM_SPECIALS as u32..(self.vocab.len() - self.unused_tokens) as u32
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        self.encode_with_report(text).ids
    }

    pub fn encode_with_report(&self, text: &str) -> Encoding {
        let mut enc = Encoding {
            ids: Vec::new(),
            unknown_chars: 0,
        };
        for word in self.segmenter.segment(text) {
            self.encode_word(word, &mut enc);
        }
        if enc.unknown_chars > 0 {
            log::debug!("{} characters mapped to the unknown token", enc.unknown_chars);
        }
        enc
    }

    fn encode_word(&self, word: &str, enc: &mut Encoding) {
        let mut symbols: Vec<u32> = Vec::with_capacity(word.len());
        let mut buf = String::new();
        for (k, c) in word.chars().enumerate() {
            buf.clear();
            if k > 0 {
                buf.push_str(&self.continuation_prefix);
            }
            buf.push(c);
            match self.token_to_id.get(buf.as_str()) {
                Some(&id) => symbols.push(id),
                None => {
                    enc.unknown_chars += 1;
                    symbols.push(UNK_ID);
                }
            }
        }
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.merge_table.get(&(w[0], w[1])).map(|&(rank, _)| (rank, (w[0], w[1]))))
                .min();
            let Some((_, pair)) = best else { break };
            let out = self.merge_table[&pair].1;
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && (symbols[i], symbols[i + 1]) == pair {
                    merged.push(out);
                    i += 2;
                } else {
                    merged.push(symbols[i]);
                    i += 1;
                }
            }
            symbols = merged;
        }
        enc.ids.extend(symbols);
    }

    /// Concatenates token bodies. Special tokens are written literally.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut out = String::new();
        for &id in ids {
            let tok = self
                .token(id)
                .ok_or_else(|| Error::input(format!("token id {id} out of range")))?;
            if self.is_continuation(id) {
                out.push_str(&tok[self.continuation_prefix.len()..]);
            } else {
                out.push_str(tok);
            }
        }
        Ok(out)
    }
}

/// The prefix must consist of punctuation so that no word-initial token can
/// ever start with it: the segmenter isolates every punctuation character.
pub(crate) fn validate_prefix(prefix: &str) -> Result<()> {
    if prefix.is_empty() || !prefix.chars().all(is_punctuation) {
        return Err(Error::config(format!(
            "continuation prefix {prefix:?} must be non-empty punctuation"
        )));
    }
    Ok(())
}
