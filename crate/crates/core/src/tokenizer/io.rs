//! On-disk layout of a tokenizer directory:
//!
//! - `vocab.txt`: one token per line, id = line number
//! - `merges.txt`: `left<TAB>right` per line, rank = line number
//! - `lexicon.txt`: one segmentation word per line, sorted
//! - `tokenizer.toml`: prefix, specials and reserved-slot count
//!
//! All files are UTF-8 with LF endings. Backslash, tab, CR and LF inside
//! tokens are escaped as `\\`, `\t`, `\r`, `\n`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{SpecialTokens, TokenizerModel};
use super::segment::Lexicon;
use crate::error::{Error, IoContext, Result};

pub const VOCAB_FILE: &str = "vocab.txt";
pub const MERGES_FILE: &str = "merges.txt";
pub const LEXICON_FILE: &str = "lexicon.txt";
pub const META_FILE: &str = "tokenizer.toml";
const FORMAT: &str = "modernzh-bpe";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    format: String,
    version: u32,
    continuation_prefix: String,
    unused_tokens: usize,
    vocab_size: usize,
    specials: SpecialTokens,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(Error::input(format!("bad escape \\{other:?} in {s:?}"))),
        }
    }
    Ok(out)
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.split('\n').filter(|l| !l.is_empty())
}

impl TokenizerModel {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).at(dir)?;
        let mut vocab = String::new();
        for t in self.vocab() {
            vocab.push_str(&escape(t));
            vocab.push('\n');
        }
        let mut merges = String::new();
        for (l, r) in self.merges() {
            merges.push_str(&escape(l));
            merges.push('\t');
            merges.push_str(&escape(r));
            merges.push('\n');
        }
        let mut lexicon = String::new();
        for w in self.lexicon().sorted_words() {
            lexicon.push_str(&escape(w));
            lexicon.push('\n');
        }
        let meta = Meta {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            continuation_prefix: self.continuation_prefix().into(),
            unused_tokens: self.unused_tokens(),
            vocab_size: self.vocab_size(),
            specials: self.specials().clone(),
        };
        let meta = toml::to_string(&meta).map_err(|e| Error::runtime(e.to_string()))?;
        for (name, body) in [
            (VOCAB_FILE, vocab),
            (MERGES_FILE, merges),
            (LEXICON_FILE, lexicon),
            (META_FILE, meta),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).at(&p)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).at(&p)
        };
        let meta: Meta = toml::from_str(&read(META_FILE)?)
            .map_err(|e| Error::input(format!("{META_FILE}: {e}")))?;
        if meta.format != FORMAT || meta.version != FORMAT_VERSION {
            return Err(Error::input(format!(
                "unsupported tokenizer format {} v{}",
                meta.format, meta.version
            )));
        }
        let vocab = lines(&read(VOCAB_FILE)?).map(unescape).collect::<Result<Vec<_>>>()?;
        if vocab.len() != meta.vocab_size {
            return Err(Error::input(format!(
                "vocab.txt has {} tokens, metadata says {}",
                vocab.len(),
                meta.vocab_size
            )));
        }
        let merges = lines(&read(MERGES_FILE)?)
            .map(|l| {
                let (a, b) = l
                    .split_once('\t')
                    .ok_or_else(|| Error::input(format!("malformed merge line {l:?}")))?;
                Ok((unescape(a)?, unescape(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let lexicon_path = dir.join(LEXICON_FILE);
        let lexicon = if lexicon_path.exists() {
            Lexicon::new(lines(&read(LEXICON_FILE)?).map(unescape).collect::<Result<Vec<_>>>()?)
        } else {
            Lexicon::default()
        };
        TokenizerModel::new(
            vocab,
            merges,
            meta.continuation_prefix,
            meta.specials,
            meta.unused_tokens,
            lexicon,
        )
    }
}

/// Reads a lexicon file (one word per line, escaped as above).
pub fn read_lexicon(path: &Path) -> Result<Lexicon> {
    let text = fs::read_to_string(path).at(path)?;
    Ok(Lexicon::new(
        lines(&text).map(|l| unescape(l.trim_end_matches('\r'))).collect::<Result<Vec<_>>>()?,
    ))
}
