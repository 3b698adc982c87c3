//! Which key positions each query may attend to.
//!
//! Every query's allowed set is a contiguous range of the flat packed
//! buffer: its own sequence on global layers, additionally clipped to
//! `|i - j| <= radius` on local layers. Attention never crosses a sequence
//! boundary.

use std::ops::Range;

use super::config::{EncoderConfig, LayerKind};
use super::packed::PackedBatch;

/// Allowed key range per query position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllowedPairs {
    pub windows: Vec<Range<usize>>,
}

impl AllowedPairs {
    pub fn allows(&self, query: usize, key: usize) -> bool {
        self.windows[query].contains(&key)
    }

    /// Number of query-key score evaluations the pattern requires.
    pub fn score_count(&self) -> u64 {
        self.windows.iter().map(|w| w.len() as u64).sum()
    }

    /// Dense boolean matrix; for tests and previews.
    pub fn to_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.windows.len();
        (0..n).map(|i| (0..n).map(|j| self.allows(i, j)).collect()).collect()
    }
}

pub fn windows_for(kind: LayerKind, radius: usize, batch: &PackedBatch) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(batch.num_tokens());
    for seq in batch.sequences() {
        for t in seq.clone() {
            out.push(match kind {
                LayerKind::Global => seq.clone(),
                LayerKind::Local => t.saturating_sub(radius).max(seq.start)..(t + radius + 1).min(seq.end),
            });
        }
    }
    out
}

pub fn attention_mask(layer_index: usize, config: &EncoderConfig, batch: &PackedBatch) -> AllowedPairs {
    AllowedPairs {
        windows: windows_for(config.layer_kind(layer_index), config.local_window_radius, batch),
    }
}

/// Closed-form score count for one sequence of length `len`.
///
/// Global: `len^2`. Local: every query sees `2r + 1` keys minus the part of
/// its window that falls off either end, giving
/// `len (2r + 1) - 2 * sum_{i < min(r, len)} (r - i)`.
pub fn analytic_score_count(kind: LayerKind, radius: usize, len: usize) -> u64 {
    let (l, r) = (len as u64, radius as u64);
    match kind {
        LayerKind::Global => l * l,
        LayerKind::Local => {
            let m = r.min(l);
            // sum_{i=0}^{m-1} (r - i) = m r - m (m - 1) / 2
            let clipped = m * r - m * (m.saturating_sub(1)) / 2;
            l * (2 * r + 1) - 2 * clipped
        }
    }
}

/// Per-layer analytic score counts for a whole packed batch.
pub fn analytic_layer_counts(config: &EncoderConfig, seq_lens: &[usize]) -> Vec<u64> {
    (0..config.layers)
        .map(|l| {
            let kind = config.layer_kind(l);
            seq_lens
                .iter()
                .map(|&n| analytic_score_count(kind, config.local_window_radius, n))
                .sum()
        })
        .collect()
}
