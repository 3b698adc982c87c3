//! Reverse-mode gradients of the MLM loss with respect to every weight.

use ndarray::{s, Array1, Array2, Axis};
use rayon::prelude::*;

use super::config::EncoderConfig;
use super::forward::{forward_cached, gelu, gelu_grad, ForwardCache, LayerCache};
use super::loss::{mlm_loss_with_grad, MlmLoss};
use super::packed::PackedBatch;
use super::real::Real;
use super::rope::rotate_heads;
use super::weights::EncoderWeights;
use crate::error::Result;

fn rms_norm_backward<T: Real>(
    dy: &Array2<T>,
    x: &Array2<T>,
    inv: &Array1<T>,
    gain: &Array1<T>,
    dgain: &mut Array1<T>,
) -> Array2<T> {
    let h = T::lit(x.ncols() as f64);
    let mut dx = Array2::zeros(x.dim());
    for (((dyr, xr), &r), mut dxr) in dy
        .axis_iter(Axis(0))
        .zip(x.axis_iter(Axis(0)))
        .zip(inv)
        .zip(dx.axis_iter_mut(Axis(0)))
    {
        let mut dot = T::zero();
        for ((&d, &xv), (&g, dg)) in dyr.iter().zip(xr).zip(gain.iter().zip(dgain.iter_mut())) {
            dot += d * g * xv;
            *dg += d * xv * r;
        }
        let coef = r * r * r / h * dot;
        for ((o, &d), (&xv, &g)) in dxr.iter_mut().zip(dyr).zip(xr.iter().zip(gain)) {
            *o = r * g * d - coef * xv;
        }
    }
    dx
}

/// Gradients of q, k, v (post-rotation) given the gradient of the context.
fn attention_backward<T: Real>(c: &LayerCache<T>, dctx: &Array2<T>, heads: usize) -> (Array2<T>, Array2<T>, Array2<T>) {
    let (n, width) = c.q.dim();
    let d = width / heads;
    let scale = T::lit(1.0 / (d as f64).sqrt());
    let (qs, ks, vs) = (c.q.as_slice().unwrap(), c.k.as_slice().unwrap(), c.v.as_slice().unwrap());
    let dcs = dctx.as_slice().unwrap();

    let per_head: Vec<[Vec<T>; 3]> = (0..heads)
        .into_par_iter()
        .map(|h| {
            let mut dq = vec![T::zero(); n * d];
            let mut dk = vec![T::zero(); n * d];
            let mut dv = vec![T::zero(); n * d];
            let probs = &c.probs[h];
            let mut dp: Vec<T> = Vec::new();
            for (t, w) in c.windows.iter().enumerate() {
                let p = &probs[c.offsets[t]..c.offsets[t + 1]];
                let dout = &dcs[t * width + h * d..t * width + (h + 1) * d];
                dp.clear();
                let mut weighted = T::zero();
                for (j, &pj) in w.clone().zip(p) {
                    let vj = &vs[j * width + h * d..j * width + (h + 1) * d];
                    let g = dout.iter().zip(vj).map(|(&a, &b)| a * b).sum::<T>();
                    weighted += pj * g;
                    dp.push(g);
                    for (acc, &o) in dv[j * d..(j + 1) * d].iter_mut().zip(dout) {
                        *acc += pj * o;
                    }
                }
                let qt = &qs[t * width + h * d..t * width + (h + 1) * d];
                for ((j, &pj), &g) in w.clone().zip(p).zip(&dp) {
                    let ds = pj * (g - weighted) * scale;
                    let kj = &ks[j * width + h * d..j * width + (h + 1) * d];
                    for (acc, &kv) in dq[t * d..(t + 1) * d].iter_mut().zip(kj) {
                        *acc += ds * kv;
                    }
                    for (acc, &qv) in dk[j * d..(j + 1) * d].iter_mut().zip(qt) {
                        *acc += ds * qv;
                    }
                }
            }
            [dq, dk, dv]
        })
        .collect();

    let mut out = [Array2::zeros((n, width)), Array2::zeros((n, width)), Array2::zeros((n, width))];
    for (h, grads) in per_head.iter().enumerate() {
        for (dst, src) in out.iter_mut().zip(grads) {
            for t in 0..n {
                dst.slice_mut(s![t, h * d..(h + 1) * d])
                    .iter_mut()
                    .zip(&src[t * d..(t + 1) * d])
                    .for_each(|(a, &b)| *a = b);
            }
        }
    }
    let [dq, dk, dv] = out;
    (dq, dk, dv)
}

pub(crate) fn backward<T: Real>(
    w: &EncoderWeights<T>,
    cfg: &EncoderConfig,
    batch: &PackedBatch,
    cache: &ForwardCache<T>,
    hidden: &Array2<T>,
    dlogits: &Array2<T>,
) -> EncoderWeights<T> {
    let mut g = EncoderWeights::<T>::zeros(cfg);
    let (hsize, heads, hd) = (cfg.hidden, cfg.heads, cfg.head_dim());
    let inter = cfg.intermediate_size();

    let proj = w.output_projection();
    let dhf = dlogits.dot(proj);
    let dproj = dlogits.t().dot(hidden);
    match &mut g.decoder {
        Some(dd) => *dd += &dproj,
        None => g.tok_embed += &dproj,
    }
    let mut dx = rms_norm_backward(&dhf, &cache.x_final, &cache.inv_final, &w.final_norm, &mut g.final_norm);

    for (l, (lw, c)) in w.layers.iter().zip(&cache.layers).enumerate().rev() {
        let gl = &mut g.layers[l];

        // MLP block: x_out = x_mid + hmid . wo_mlp
        gl.wo_mlp += &c.hmid.t().dot(&dx);
        let dh = dx.dot(&lw.wo_mlp.t());
        let mut du = Array2::zeros(c.u.dim());
        for ((urow, dhrow), mut durow) in c.u.axis_iter(Axis(0)).zip(dh.axis_iter(Axis(0))).zip(du.axis_iter_mut(Axis(0))) {
            for col in 0..inter {
                let (a, gate) = (urow[col], urow[inter + col]);
                durow[col] = dhrow[col] * gate * gelu_grad(a);
                durow[inter + col] = dhrow[col] * gelu(a);
            }
        }
        gl.wi += &c.n2.t().dot(&du);
        let dn2 = du.dot(&lw.wi.t());
        let dx_mid = &dx + &rms_norm_backward(&dn2, &c.x_mid, &c.inv2, &lw.mlp_norm, &mut gl.mlp_norm);

        // Attention block: x_mid = x_in + ctx . wo
        gl.wo += &c.ctx.t().dot(&dx_mid);
        let dctx = dx_mid.dot(&lw.wo.t());
        let (mut dq, mut dk, dv) = attention_backward(c, &dctx, heads);
        let theta = cfg.rope_theta(l);
        rotate_heads(dq.as_slice_mut().unwrap(), heads, hd, &cache.positions, theta, true);
        rotate_heads(dk.as_slice_mut().unwrap(), heads, hd, &cache.positions, theta, true);
        let mut dqkv = Array2::zeros((dq.nrows(), 3 * hsize));
        dqkv.slice_mut(s![.., 0..hsize]).assign(&dq);
        dqkv.slice_mut(s![.., hsize..2 * hsize]).assign(&dk);
        dqkv.slice_mut(s![.., 2 * hsize..]).assign(&dv);
        gl.wqkv += &c.n1.t().dot(&dqkv);
        let dn1 = dqkv.dot(&lw.wqkv.t());
        dx = &dx_mid + &rms_norm_backward(&dn1, &c.x_in, &c.inv1, &lw.attn_norm, &mut gl.attn_norm);
    }

    for (row, &id) in dx.axis_iter(Axis(0)).zip(&batch.token_ids) {
        let mut dst = g.tok_embed.row_mut(id as usize);
        dst += &row;
    }
    g
}

/// MLM loss over `labels` and the gradient of that loss for every weight.
pub fn loss_and_grad<T: Real>(
    weights: &EncoderWeights<T>,
    cfg: &EncoderConfig,
    batch: &PackedBatch,
    labels: &[Option<u32>],
) -> Result<(MlmLoss, EncoderWeights<T>)> {
    let (out, cache) = forward_cached(weights, cfg, batch)?;
    let (loss, dlogits) = mlm_loss_with_grad(&out.logits, labels)?;
    let grads = backward(weights, cfg, batch, &cache, &out.hidden, &dlogits);
    Ok((loss, grads))
}
