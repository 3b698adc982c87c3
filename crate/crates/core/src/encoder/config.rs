use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoder hyperparameters. Defaults are the full-size model: 28 layers,
/// 1024 hidden, 16 heads, RoPE bases 80k (global) / 10k (local), one global
/// layer every three, 128-token local window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    /// GeGLU intermediate width as a multiple of `hidden`, rounded to
    /// `ffn_multiple`. Ignored when `intermediate` is set.
    pub ffn_expansion: f64,
    pub ffn_multiple: usize,
    pub intermediate: Option<usize>,
    pub rope_theta_global: f64,
    pub rope_theta_local: f64,
    /// Layer `l` is global when `(l - global_layer_offset) % interval == 0`.
    pub global_layer_interval: usize,
    pub global_layer_offset: usize,
    /// Local layers attend to `|i - j| <= radius` within the same sequence.
    pub local_window_radius: usize,
    pub max_context: usize,
    pub vocab_size: usize,
    pub norm_eps: f64,
    pub tie_embeddings: bool,
    pub init_std: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            layers: 28,
            hidden: 1024,
            heads: 16,
            ffn_expansion: 2.6,
            ffn_multiple: 64,
            intermediate: None,
            rope_theta_global: 80_000.0,
            rope_theta_local: 10_000.0,
            global_layer_interval: 3,
            global_layer_offset: 0,
            local_window_radius: 64,
            max_context: 8192,
            vocab_size: 32_979,
            norm_eps: 1e-6,
            tie_embeddings: true,
            init_std: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Global,
    Local,
}

impl EncoderConfig {
    /// A two-layer model small enough for finite-difference checks.
    pub fn toy() -> Self {
        Self {
            layers: 2,
            hidden: 8,
            heads: 2,
            intermediate: Some(12),
            global_layer_interval: 2,
            local_window_radius: 2,
            max_context: 64,
            vocab_size: 11,
            init_std: 0.3,
            ..Default::default()
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads.max(1)
    }

    pub fn intermediate_size(&self) -> usize {
        if let Some(i) = self.intermediate {
            return i;
        }
        let m = self.ffn_multiple.max(1);
        // Rounded down: at the default shape this lands on 2624 and a 377.0M
        // parameter total.
        let units = (self.ffn_expansion * self.hidden as f64 / m as f64).floor() as usize;
        units.max(1) * m
    }

    pub fn layer_kind(&self, layer: usize) -> LayerKind {
        let k = self.global_layer_interval.max(1);
        if (layer + k - self.global_layer_offset % k).is_multiple_of(k) {
            LayerKind::Global
        } else {
            LayerKind::Local
        }
    }

    pub fn rope_theta(&self, layer: usize) -> f64 {
        match self.layer_kind(layer) {
            LayerKind::Global => self.rope_theta_global,
            LayerKind::Local => self.rope_theta_local,
        }
    }

    /// Shape checks only; `vocab_size` may be zero here.
    pub fn validate_shape(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 {
            return Err(Error::config("encoder layers, hidden and heads must be positive"));
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return Err(Error::config(format!(
                "encoder.hidden {} is not divisible by heads {}",
                self.hidden, self.heads
            )));
        }
        if !self.head_dim().is_multiple_of(2) {
            return Err(Error::config(format!(
                "encoder head_dim {} must be even for rotary embeddings",
                self.head_dim()
            )));
        }
        if self.global_layer_interval == 0 {
            return Err(Error::config("encoder.global_layer_interval must be >= 1"));
        }
        if self.local_window_radius == 0 {
            return Err(Error::config("encoder.local_window_radius must be >= 1"));
        }
        if self.intermediate_size() == 0 {
            return Err(Error::config("encoder intermediate size must be positive"));
        }
        if !(self.rope_theta_global > 1.0 && self.rope_theta_local > 1.0) {
            return Err(Error::config("rope bases must exceed 1"));
        }
        if !(self.norm_eps > 0.0) {
            return Err(Error::config("encoder.norm_eps must be positive"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if self.vocab_size == 0 || self.max_context == 0 {
            return Err(Error::config("encoder vocab_size and max_context must be positive"));
        }
        Ok(())
    }

    /// Every weight tensor in canonical order. Linear layers carry no bias.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (h, i, v) = (self.hidden, self.intermediate_size(), self.vocab_size);
        let mut out = vec![("embeddings.tok".to_string(), vec![v, h])];
        for l in 0..self.layers {
            out.push((format!("layers.{l}.attn_norm"), vec![h]));
            out.push((format!("layers.{l}.attn.wqkv"), vec![h, 3 * h]));
            out.push((format!("layers.{l}.attn.wo"), vec![h, h]));
            out.push((format!("layers.{l}.mlp_norm"), vec![h]));
            out.push((format!("layers.{l}.mlp.wi"), vec![h, 2 * i]));
            out.push((format!("layers.{l}.mlp.wo"), vec![i, h]));
        }
        out.push(("final_norm".to_string(), vec![h]));
        if !self.tie_embeddings {
            out.push(("head.decoder".to_string(), vec![v, h]));
        }
        out
    }

    pub fn param_count(&self) -> u64 {
        self.param_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>() as u64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let c = EncoderConfig::default();
        c.validate().unwrap();
        assert_eq!(c.head_dim(), 64);
        assert_eq!(c.intermediate_size(), 2624);
        assert_eq!(c.layer_kind(0), LayerKind::Global);
        assert_eq!(c.layer_kind(1), LayerKind::Local);
        assert_eq!(c.layer_kind(3), LayerKind::Global);
        assert_eq!(c.rope_theta(0), 80_000.0);
        assert_eq!(c.rope_theta(2), 10_000.0);
    }

    #[test]
    fn layer_offset() {
        let c = EncoderConfig {
            global_layer_offset: 1,
            ..Default::default()
        };
        assert_eq!(c.layer_kind(0), LayerKind::Local);
        assert_eq!(c.layer_kind(1), LayerKind::Global);
        assert_eq!(c.layer_kind(4), LayerKind::Global);
    }

    #[test]
    fn invalid_configs() {
        let odd = EncoderConfig {
            hidden: 12,
            heads: 4,
            ..Default::default()
        };
        assert!(matches!(odd.validate(), Err(Error::Config(_))));
        let indivisible = EncoderConfig {
            hidden: 10,
            heads: 4,
            ..Default::default()
        };
        assert!(indivisible.validate().is_err());
    }

    #[test]
    fn param_count_by_enumeration() {
        let c = EncoderConfig::toy();
        // emb 11*8 + 2 * (8 + 8*24 + 8*8 + 8 + 8*24 + 12*8) + 8
        assert_eq!(c.param_count(), 88 + 2 * (8 + 192 + 64 + 8 + 192 + 96) + 8);
    }
}
