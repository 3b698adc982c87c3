use serde::{Deserialize, Serialize};

use crate::encoder::{decays, EncoderWeights};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip_norm: Option<f64>,
    /// Scale the step down by the update RMS when it exceeds 1.
    pub rms_clip: bool,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.95,
            eps: 1e-8,
            weight_decay: 0.1,
            grad_clip_norm: Some(1.0),
            rms_clip: true,
        }
    }
}

impl AdamWConfig {
    /// Textbook AdamW: no gradient clip, no RMS scaling.
    pub fn plain(weight_decay: f64) -> Self {
        Self {
            weight_decay,
            grad_clip_norm: None,
            rms_clip: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| (0.0..1.0).contains(&b);
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::config("adamw betas must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::config("adamw eps must be positive and weight_decay non-negative"));
        }
        if let Some(c) = self.grad_clip_norm {
            if !(c > 0.0) {
                return Err(Error::config("grad_clip_norm must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub name: String,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    pub step: u64,
    pub moments: Vec<Moments>,
}

/// Diagnostics from one accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepStats {
    pub grad_norm: f64,
    pub clip_scale: f64,
    /// Effective learning rate per tensor, in tensor order.
    pub eta_eff: Vec<f64>,
}

impl OptimizerState {
    /// Zero moments for tensors of the given names and lengths.
    pub fn new<S: Into<String>>(config: AdamWConfig, tensors: impl IntoIterator<Item = (S, usize)>) -> Self {
        let moments = tensors
            .into_iter()
            .map(|(name, len)| Moments {
                name: name.into(),
                m: vec![0.0; len],
                v: vec![0.0; len],
            })
            .collect();
        Self {
            config,
            step: 0,
            moments,
        }
    }

    pub fn for_weights(config: AdamWConfig, weights: &EncoderWeights<f64>) -> Self {
        Self::new(config, weights.tensors().into_iter().map(|(n, t)| (n, t.len())))
    }
}

fn check_shapes(state: &OptimizerState, params: &[(String, &mut [f64])], grads: &[(String, &[f64])]) -> Result<()> {
    if params.len() != state.moments.len() || grads.len() != state.moments.len() {
        return Err(Error::input(format!(
            "optimizer tracks {} tensors, got {} weights and {} gradients",
            state.moments.len(),
            params.len(),
            grads.len()
        )));
    }
    for ((mo, (pn, p)), (gn, g)) in state.moments.iter().zip(params).zip(grads) {
        if &mo.name != pn || &mo.name != gn || mo.m.len() != p.len() || mo.m.len() != g.len() {
            return Err(Error::input(format!("tensor mismatch at `{}`", mo.name)));
        }
    }
    Ok(())
}

/// One StableAdamW update in place.
///
/// Gradients are clipped to the global norm, moments are updated with bias
/// correction, and each tensor's learning rate is divided by the RMS of
/// `m_hat / sqrt(v_hat + eps)` when that exceeds 1. Decoupled weight decay
/// `eta * weight_decay * w` is applied to every tensor except norm gains.
/// On error nothing is modified.
pub fn stable_adamw_step(
    state: &mut OptimizerState,
    mut params: Vec<(String, &mut [f64])>,
    grads: Vec<(String, &[f64])>,
    eta: f64,
) -> Result<StepStats> {
    let cfg = state.config.clone();
    cfg.validate()?;
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::input(format!("learning rate {eta} is not a finite non-negative value")));
    }
    check_shapes(state, &params, &grads)?;
    if let Some((name, _)) = grads.iter().find(|(_, g)| g.iter().any(|x| !x.is_finite())) {
        return Err(Error::runtime(format!("non-finite gradient in `{name}`, step rejected")));
    }

    let grad_norm = grads
        .iter()
        .flat_map(|(_, g)| g.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let clip_scale = match cfg.grad_clip_norm {
        Some(c) if grad_norm > c => c / grad_norm,
        _ => 1.0,
    };

    let t = state.step + 1;
    let bc1 = 1.0 - cfg.beta1.powf(t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(t as f64);
    let mut eta_eff = Vec::with_capacity(grads.len());
    for ((mo, (name, w)), (_, g)) in state.moments.iter_mut().zip(params.iter_mut()).zip(&grads) {
        let mut sq = 0.0;
        for ((m, v), &gi) in mo.m.iter_mut().zip(mo.v.iter_mut()).zip(g.iter()) {
            let gc = gi * clip_scale;
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gc;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gc * gc;
            let r = (*m / bc1) / (*v / bc2 + cfg.eps).sqrt();
            sq += r * r;
        }
        let rms = if mo.m.is_empty() { 0.0 } else { (sq / mo.m.len() as f64).sqrt() };
        let lr = if cfg.rms_clip { eta / rms.max(1.0) } else { eta };
        let decay = if decays(name) { eta * cfg.weight_decay } else { 0.0 };
        for ((x, &m), &v) in w.iter_mut().zip(&mo.m).zip(&mo.v) {
            let update = (m / bc1) / ((v / bc2).sqrt() + cfg.eps);
            *x -= lr * update + decay * *x;
        }
        eta_eff.push(lr);
    }
    state.step = t;
    Ok(StepStats {
        grad_norm,
        clip_scale,
        eta_eff,
    })
}

/// Convenience wrapper over every tensor of an encoder.
pub fn step_encoder(
    state: &mut OptimizerState,
    weights: &mut EncoderWeights<f64>,
    grads: &EncoderWeights<f64>,
    eta: f64,
) -> Result<StepStats> {
    let params = weights.tensors_mut();
    let grads = grads.tensors();
    stable_adamw_step(state, params, grads, eta)
}
