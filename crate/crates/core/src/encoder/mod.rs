//! Pre-norm Transformer encoder with RMSNorm, GeGLU, bias-free linears,
//! dual-base RoPE and alternating local/global attention over packed batches.

mod backward;
mod checkpoint;
mod config;
mod forward;
mod loss;
mod packed;
mod pattern;
mod real;
mod rope;
mod weights;

pub use backward::loss_and_grad;
pub use checkpoint::{Checkpoint, BLOB_FILE, CONFIG_FILE, MANIFEST_FILE, TRAINING_FILE};
pub use config::{EncoderConfig, LayerKind};
pub use forward::{forward_weights, rms_normalize, ForwardOutput};
pub use loss::{log_sum_exp, mlm_loss, mlm_loss_with_grad, MlmLoss};
pub use packed::PackedBatch;
pub use pattern::{analytic_layer_counts, analytic_score_count, attention_mask, windows_for, AllowedPairs};
pub use real::Real;
pub use rope::{inverse_frequencies, rope_rotate};
pub use weights::{decays, EncoderWeights, LayerWeights};

/// `forward` over a checkpoint.
pub fn forward(checkpoint: &Checkpoint, batch: &PackedBatch) -> crate::error::Result<ForwardOutput<f64>> {
    checkpoint.forward(batch)
}
