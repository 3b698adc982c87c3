use std::ops::Range;

use crate::tokenizer::TokenizerModel;

/// Whole-word spans over a token sequence. Special tokens belong to no span
/// and always end the current one.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WordGrouping {
    pub groups: Vec<Range<usize>>,
}

impl WordGrouping {
    /// Positions covered by some span.
    pub fn maskable_positions(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }
}

pub fn group_words(tokens: &[u32], model: &TokenizerModel) -> WordGrouping {
    let mut groups: Vec<Range<usize>> = Vec::new();
    let mut open = false;
    for (i, &id) in tokens.iter().enumerate() {
        if model.is_special(id) {
            open = false;
            continue;
        }
        if model.is_continuation(id) && open {
            groups.last_mut().expect("open span").end = i + 1;
            continue;
        }
        if model.is_continuation(id) {
            log::debug!("continuation token at position {i} starts a word");
        }
        groups.push(i..i + 1);
        open = true;
    }
    WordGrouping { groups }
}
