use std::ops::Range;

use ndarray::{s, Array1, Array2, Axis};
use rayon::prelude::*;

use super::config::EncoderConfig;
use super::packed::PackedBatch;
use super::pattern::windows_for;
use super::real::Real;
use super::rope::rotate_heads;
use super::weights::EncoderWeights;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ForwardOutput<T> {
    /// Final hidden states after the last norm, one row per packed token.
    pub hidden: Array2<T>,
    pub logits: Array2<T>,
    /// Query-key score evaluations performed by each layer.
    pub score_counts: Vec<u64>,
}

pub(crate) struct LayerCache<T> {
    pub x_in: Array2<T>,
    pub inv1: Array1<T>,
    pub n1: Array2<T>,
    pub q: Array2<T>,
    pub k: Array2<T>,
    pub v: Array2<T>,
    pub windows: Vec<Range<usize>>,
    pub offsets: Vec<usize>,
    pub probs: Vec<Vec<T>>,
    pub ctx: Array2<T>,
    pub x_mid: Array2<T>,
    pub inv2: Array1<T>,
    pub n2: Array2<T>,
    pub u: Array2<T>,
    pub hmid: Array2<T>,
}

pub(crate) struct ForwardCache<T> {
    pub positions: Vec<usize>,
    pub layers: Vec<LayerCache<T>>,
    pub x_final: Array2<T>,
    pub inv_final: Array1<T>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_K: f64 = 0.044_715;

/// GELU, tanh approximation.
pub(crate) fn gelu<T: Real>(x: T) -> T {
    let z = T::lit(GELU_C) * (x + T::lit(GELU_K) * x * x * x);
    T::lit(0.5) * x * (T::one() + z.tanh())
}

pub(crate) fn gelu_grad<T: Real>(x: T) -> T {
    let z = T::lit(GELU_C) * (x + T::lit(GELU_K) * x * x * x);
    let t = z.tanh();
    let dz = T::lit(GELU_C) * (T::one() + T::lit(3.0 * GELU_K) * x * x);
    T::lit(0.5) * (T::one() + t) + T::lit(0.5) * x * (T::one() - t * t) * dz
}

/// Row-wise RMS normalization with gain. Returns the output and each row's
/// inverse RMS.
pub(crate) fn rms_norm<T: Real>(x: &Array2<T>, gain: &Array1<T>, eps: f64) -> (Array2<T>, Array1<T>) {
    let h = T::lit(x.ncols() as f64);
    let mut out = x.clone();
    let mut inv = Array1::zeros(x.nrows());
    for (mut row, r) in out.axis_iter_mut(Axis(0)).zip(inv.iter_mut()) {
        let ms = row.iter().map(|&v| v * v).sum::<T>() / h;
        *r = T::one() / (ms + T::lit(eps)).sqrt();
        for (v, &g) in row.iter_mut().zip(gain) {
            *v = *v * *r * g;
        }
    }
    (out, inv)
}

/// Unit-gain RMS normalization of a single vector.
pub fn rms_normalize<T: Real>(x: &[T], eps: f64) -> Vec<T> {
    let ms = x.iter().map(|&v| v * v).sum::<T>() / T::lit(x.len() as f64);
    let r = T::one() / (ms + T::lit(eps)).sqrt();
    x.iter().map(|&v| v * r).collect()
}

pub(crate) fn prob_offsets(windows: &[Range<usize>]) -> Vec<usize> {
    let mut off = Vec::with_capacity(windows.len() + 1);
    let mut acc = 0;
    off.push(0);
    for w in windows {
        acc += w.len();
        off.push(acc);
    }
    off
}

/// Windowed softmax attention for every head. Returns the concatenated
/// context and, when requested, each head's attention probabilities laid out
/// by `prob_offsets`.
pub(crate) fn attend<T: Real>(
    q: &Array2<T>,
    k: &Array2<T>,
    v: &Array2<T>,
    windows: &[Range<usize>],
    heads: usize,
    keep_probs: bool,
) -> (Array2<T>, Vec<Vec<T>>) {
    let (n, width) = q.dim();
    let d = width / heads;
    let scale = T::lit(1.0 / (d as f64).sqrt());
    let (qs, ks, vs) = (q.as_slice().unwrap(), k.as_slice().unwrap(), v.as_slice().unwrap());
    let total: usize = if keep_probs { windows.iter().map(|w| w.len()).sum() } else { 0 };

    let per_head: Vec<(Vec<T>, Vec<T>)> = (0..heads)
        .into_par_iter()
        .map(|h| {
            let mut ctx = vec![T::zero(); n * d];
            let mut probs = Vec::with_capacity(total);
            let mut scores: Vec<T> = Vec::new();
            for (t, w) in windows.iter().enumerate() {
                let qt = &qs[t * width + h * d..t * width + (h + 1) * d];
                scores.clear();
                let mut max = T::neg_infinity();
                for j in w.clone() {
                    let kj = &ks[j * width + h * d..j * width + (h + 1) * d];
                    let s = qt.iter().zip(kj).map(|(&a, &b)| a * b).sum::<T>() * scale;
                    max = max.max(s);
                    scores.push(s);
                }
                let mut denom = T::zero();
                for s in scores.iter_mut() {
                    *s = (*s - max).exp();
                    denom += *s;
                }
                let out = &mut ctx[t * d..(t + 1) * d];
                for (j, s) in w.clone().zip(scores.iter_mut()) {
                    *s /= denom;
                    let vj = &vs[j * width + h * d..j * width + (h + 1) * d];
                    for (o, &x) in out.iter_mut().zip(vj) {
                        *o += *s * x;
                    }
                }
                if keep_probs {
                    probs.extend_from_slice(&scores);
                }
            }
            (ctx, probs)
        })
        .collect();

    let mut ctx = Array2::zeros((n, width));
    let mut probs = Vec::with_capacity(if keep_probs { heads } else { 0 });
    for (h, (c, p)) in per_head.into_iter().enumerate() {
        for t in 0..n {
            ctx.slice_mut(s![t, h * d..(h + 1) * d])
                .iter_mut()
                .zip(&c[t * d..(t + 1) * d])
                .for_each(|(dst, &src)| *dst = src);
        }
        if keep_probs {
            probs.push(p);
        }
    }
    (ctx, probs)
}

pub(crate) fn check_batch(cfg: &EncoderConfig, batch: &PackedBatch) -> Result<()> {
    cfg.validate()?;
    batch.validate()?;
    if let Some(&bad) = batch.token_ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
        return Err(Error::input(format!(
            "token id {bad} out of range for vocabulary of {}",
            cfg.vocab_size
        )));
    }
    if batch.max_len > cfg.max_context {
        return Err(Error::input(format!(
            "sequence length {} exceeds max_context {}",
            batch.max_len, cfg.max_context
        )));
    }
    Ok(())
}

pub(crate) fn forward_impl<T: Real>(
    w: &EncoderWeights<T>,
    cfg: &EncoderConfig,
    batch: &PackedBatch,
    mut cache: Option<&mut ForwardCache<T>>,
) -> Result<ForwardOutput<T>> {
    check_batch(cfg, batch)?;
    let (hidden, heads, hd) = (cfg.hidden, cfg.heads, cfg.head_dim());
    let inter = cfg.intermediate_size();
    let n = batch.num_tokens();
    let positions = batch.positions();

    let mut x = Array2::zeros((n, hidden));
    for (mut row, &id) in x.axis_iter_mut(Axis(0)).zip(&batch.token_ids) {
        row.assign(&w.tok_embed.row(id as usize));
    }

    let mut score_counts = Vec::with_capacity(cfg.layers);
    for (l, lw) in w.layers.iter().enumerate() {
        let windows = windows_for(cfg.layer_kind(l), cfg.local_window_radius, batch);
        score_counts.push(windows.iter().map(|r| r.len() as u64).sum());

        let (n1, inv1) = rms_norm(&x, &lw.attn_norm, cfg.norm_eps);
        let qkv = n1.dot(&lw.wqkv);
        let mut q = qkv.slice(s![.., 0..hidden]).to_owned();
        let mut k = qkv.slice(s![.., hidden..2 * hidden]).to_owned();
        let v = qkv.slice(s![.., 2 * hidden..]).to_owned();
        let theta = cfg.rope_theta(l);
        rotate_heads(q.as_slice_mut().unwrap(), heads, hd, &positions, theta, false);
        rotate_heads(k.as_slice_mut().unwrap(), heads, hd, &positions, theta, false);

        let (ctx, probs) = attend(&q, &k, &v, &windows, heads, cache.is_some());
        let x_mid = &x + &ctx.dot(&lw.wo);

        let (n2, inv2) = rms_norm(&x_mid, &lw.mlp_norm, cfg.norm_eps);
        let u = n2.dot(&lw.wi);
        let mut hmid = Array2::zeros((n, inter));
        for (mut hrow, urow) in hmid.axis_iter_mut(Axis(0)).zip(u.axis_iter(Axis(0))) {
            for c in 0..inter {
                hrow[c] = gelu(urow[c]) * urow[inter + c];
            }
        }
        let x_out = &x_mid + &hmid.dot(&lw.wo_mlp);

        if let Some(c) = cache.as_deref_mut() {
            let offsets = prob_offsets(&windows);
            c.layers.push(LayerCache {
                x_in: x,
                inv1,
                n1,
                q,
                k,
                v,
                windows,
                offsets,
                probs,
                ctx,
                x_mid,
                inv2,
                n2,
                u,
                hmid,
            });
        }
        x = x_out;
    }

    let (hf, inv_f) = rms_norm(&x, &w.final_norm, cfg.norm_eps);
    let logits = hf.dot(&w.output_projection().t());
    if let Some(c) = cache {
        c.positions = positions;
        c.x_final = x;
        c.inv_final = inv_f;
    }
    Ok(ForwardOutput {
        hidden: hf,
        logits,
        score_counts,
    })
}

/// Full forward pass over a packed batch.
pub fn forward_weights<T: Real>(
    weights: &EncoderWeights<T>,
    cfg: &EncoderConfig,
    batch: &PackedBatch,
) -> Result<ForwardOutput<T>> {
    forward_impl(weights, cfg, batch, None)
}

/// Forward pass that also returns the activations needed by `backward`.
pub(crate) fn forward_cached<T: Real>(
    weights: &EncoderWeights<T>,
    cfg: &EncoderConfig,
    batch: &PackedBatch,
) -> Result<(ForwardOutput<T>, ForwardCache<T>)> {
    let mut cache = ForwardCache {
        positions: Vec::new(),
        layers: Vec::with_capacity(cfg.layers),
        x_final: Array2::zeros((0, 0)),
        inv_final: Array1::zeros(0),
    };
    let out = forward_impl(weights, cfg, batch, Some(&mut cache))?;
    Ok((out, cache))
}
