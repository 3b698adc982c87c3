//! Pre-tokenization into words.
//!
//! Word boundaries decide which subwords carry the continuation prefix and
//! therefore which token spans whole-word masking treats as one unit.

use std::collections::HashSet;

/// Splits text into words. Concatenating the returned words must reproduce
/// the input exactly.
pub trait Segmenter: Send + Sync {
    fn segment<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x30000..=0x3134F
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

/// ASCII punctuation plus the CJK, full-width and general punctuation blocks.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c as u32,
            0x2000..=0x206F
            | 0x3000..=0x303F
            | 0xFE30..=0xFE4F
            | 0xFF01..=0xFF0F
            | 0xFF1A..=0xFF20
            | 0xFF3B..=0xFF40
            | 0xFF5B..=0xFF65)
        && !c.is_whitespace()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CharClass {
    Space,
    Punct,
    Cjk,
    Other,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if is_punctuation(c) {
        CharClass::Punct
    } else if is_cjk(c) {
        CharClass::Cjk
    } else {
        CharClass::Other
    }
}

/// A set of known multi-character CJK words used for forward maximum
/// matching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: HashSet<String>,
    max_chars: usize,
}

impl Lexicon {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = Lexicon::default();
        for w in words {
            lex.insert(w.into());
        }
        lex
    }

    pub fn insert(&mut self, word: String) {
        let n = word.chars().count();
        if n < 2 {
            return;
        }
        self.max_chars = self.max_chars.max(n);
        self.words.insert(word);
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in sorted order, for serialization.
    pub fn sorted_words(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.words.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

/// Default segmenter:
/// - every whitespace run is one word,
/// - every punctuation character is a word of its own,
/// - CJK runs are cut by longest match against the lexicon, unmatched
///   characters becoming single-character words,
/// - any other maximal run (Latin letters, digits, ...) is one word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefaultSegmenter {
    pub lexicon: Lexicon,
}

impl DefaultSegmenter {
    pub fn new(lexicon: Lexicon) -> Self {
        Self { lexicon }
    }

    fn push_cjk_run<'a>(&self, run: &'a str, out: &mut Vec<&'a str>) {
        let bounds: Vec<usize> = run
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(run.len()))
            .collect();
        let n = bounds.len() - 1;
        let mut i = 0;
        while i < n {
            let longest = self.lexicon.max_chars.min(n - i);
            let mut len = 1;
            for cand in (2..=longest).rev() {
                if self.lexicon.contains(&run[bounds[i]..bounds[i + cand]]) {
                    len = cand;
                    break;
                }
            }
            out.push(&run[bounds[i]..bounds[i + len]]);
            i += len;
        }
    }
}

impl Segmenter for DefaultSegmenter {
    fn segment<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut start = 0;
        let mut current: Option<CharClass> = None;
        for (i, c) in text.char_indices() {
            let class = classify(c);
            match current {
                Some(prev) if prev == class && class != CharClass::Punct => {}
                Some(prev) => {
                    self.flush(prev, &text[start..i], &mut out);
                    start = i;
                    current = Some(class);
                }
                None => {
                    start = i;
                    current = Some(class);
                }
            }
        }
        if let Some(prev) = current {
            self.flush(prev, &text[start..], &mut out);
        }
        out
    }
}

impl DefaultSegmenter {
    fn flush<'a>(&self, class: CharClass, run: &'a str, out: &mut Vec<&'a str>) {
        if class == CharClass::Cjk {
            self.push_cjk_run(run, out);
        } else {
            out.push(run);
        }
    }
}
