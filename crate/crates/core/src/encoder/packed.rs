use std::ops::Range;

use crate::error::{Error, Result};

/// Variable-length sequences concatenated without padding. Sequence `s`
/// occupies `token_ids[cu_seqlens[s]..cu_seqlens[s + 1]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedBatch {
    pub token_ids: Vec<u32>,
    pub cu_seqlens: Vec<usize>,
    pub max_len: usize,
}

impl PackedBatch {
    pub fn from_sequences<S: AsRef<[u32]>>(seqs: &[S]) -> Result<Self> {
        let mut token_ids = Vec::new();
        let mut cu_seqlens = vec![0];
        let mut max_len = 0;
        for s in seqs {
            let s = s.as_ref();
            if s.is_empty() {
                return Err(Error::input("packed batch cannot hold an empty sequence"));
            }
            token_ids.extend_from_slice(s);
            cu_seqlens.push(token_ids.len());
            max_len = max_len.max(s.len());
        }
        if token_ids.is_empty() {
            return Err(Error::input("packed batch has no sequences"));
        }
        Ok(Self {
            token_ids,
            cu_seqlens,
            max_len,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cu = &self.cu_seqlens;
        if cu.len() < 2 || cu[0] != 0 || *cu.last().unwrap() != self.token_ids.len() {
            return Err(Error::input("cu_seqlens must start at 0 and end at the token count"));
        }
        if cu.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("cu_seqlens must be strictly increasing"));
        }
        let longest = cu.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        if longest != self.max_len {
            return Err(Error::input(format!(
                "max_len {} disagrees with longest sequence {longest}",
                self.max_len
            )));
        }
        Ok(())
    }

    pub fn num_tokens(&self) -> usize {
        self.token_ids.len()
    }

    pub fn num_sequences(&self) -> usize {
        self.cu_seqlens.len() - 1
    }

    pub fn sequence(&self, s: usize) -> Range<usize> {
        self.cu_seqlens[s]..self.cu_seqlens[s + 1]
    }

    pub fn sequences(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.cu_seqlens.windows(2).map(|w| w[0]..w[1])
    }

    /// Position of every token within its own sequence.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_tokens());
        for r in self.sequences() {
            out.extend(0..r.len());
        }
        out
    }
}
