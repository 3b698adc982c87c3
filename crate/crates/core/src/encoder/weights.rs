use ndarray::{Array1, Array2};
use rand::Rng;

use super::config::EncoderConfig;
use super::real::Real;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights<T> {
    pub attn_norm: Array1<T>,
    /// `hidden x 3 hidden`, columns ordered q | k | v, heads contiguous.
    pub wqkv: Array2<T>,
    pub wo: Array2<T>,
    pub mlp_norm: Array1<T>,
    /// `hidden x 2 intermediate`, columns ordered gelu-input | gate.
    pub wi: Array2<T>,
    pub wo_mlp: Array2<T>,
}

/// All learned tensors of the encoder. Also used to hold gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderWeights<T> {
    pub tok_embed: Array2<T>,
    pub layers: Vec<LayerWeights<T>>,
    pub final_norm: Array1<T>,
    /// Separate MLM output projection; `None` when tied to `tok_embed`.
    pub decoder: Option<Array2<T>>,
}

/// Whether optimizer weight decay applies to a tensor: norm gains are
/// excluded.
pub fn decays(name: &str) -> bool {
    !name.ends_with("norm")
}

impl<T: Real> EncoderWeights<T> {
    /// All-zero tensors; norm gains included.
    pub fn zeros(cfg: &EncoderConfig) -> Self {
        let (h, i, v) = (cfg.hidden, cfg.intermediate_size(), cfg.vocab_size);
        Self {
            tok_embed: Array2::zeros((v, h)),
            layers: (0..cfg.layers)
                .map(|_| LayerWeights {
                    attn_norm: Array1::zeros(h),
                    wqkv: Array2::zeros((h, 3 * h)),
                    wo: Array2::zeros((h, h)),
                    mlp_norm: Array1::zeros(h),
                    wi: Array2::zeros((h, 2 * i)),
                    wo_mlp: Array2::zeros((i, h)),
                })
                .collect(),
            final_norm: Array1::zeros(h),
            decoder: (!cfg.tie_embeddings).then(|| Array2::zeros((v, h))),
        }
    }

    /// Zero matrices with unit norm gains.
    pub fn zero_init(cfg: &EncoderConfig) -> Self {
        let mut w = Self::zeros(cfg);
        w.for_each_mut(|name, data| {
            if !decays(name) {
                data.fill(T::one());
            }
        });
        w
    }

    /// Unit norm gains; every other tensor drawn from a normal distribution
    /// with `init_std`, truncated at three standard deviations.
    pub fn init(cfg: &EncoderConfig, root_seed: u64) -> Self {
        let mut w = Self::zero_init(cfg);
        let mut rng = seed::rng(seed::derive(root_seed, "encoder.init"));
        let std = cfg.init_std;
        w.for_each_mut(|name, data| {
            if decays(name) {
                for x in data.iter_mut() {
                    *x = T::lit(std * truncated_normal(&mut rng));
                }
            }
        });
        w
    }

    pub fn tensors(&self) -> Vec<(String, &[T])> {
        let mut out: Vec<(String, &[T])> = vec![("embeddings.tok".into(), slice(&self.tok_embed))];
        for (l, lw) in self.layers.iter().enumerate() {
            out.push((format!("layers.{l}.attn_norm"), lw.attn_norm.as_slice().unwrap()));
            out.push((format!("layers.{l}.attn.wqkv"), slice(&lw.wqkv)));
            out.push((format!("layers.{l}.attn.wo"), slice(&lw.wo)));
            out.push((format!("layers.{l}.mlp_norm"), lw.mlp_norm.as_slice().unwrap()));
            out.push((format!("layers.{l}.mlp.wi"), slice(&lw.wi)));
            out.push((format!("layers.{l}.mlp.wo"), slice(&lw.wo_mlp)));
        }
        out.push(("final_norm".into(), self.final_norm.as_slice().unwrap()));
        if let Some(d) = &self.decoder {
            out.push(("head.decoder".into(), slice(d)));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [T])> {
        let mut out: Vec<(String, &mut [T])> =
            vec![("embeddings.tok".into(), self.tok_embed.as_slice_mut().unwrap())];
        for (l, lw) in self.layers.iter_mut().enumerate() {
            out.push((format!("layers.{l}.attn_norm"), lw.attn_norm.as_slice_mut().unwrap()));
            out.push((format!("layers.{l}.attn.wqkv"), lw.wqkv.as_slice_mut().unwrap()));
            out.push((format!("layers.{l}.attn.wo"), lw.wo.as_slice_mut().unwrap()));
            out.push((format!("layers.{l}.mlp_norm"), lw.mlp_norm.as_slice_mut().unwrap()));
            out.push((format!("layers.{l}.mlp.wi"), lw.wi.as_slice_mut().unwrap()));
            out.push((format!("layers.{l}.mlp.wo"), lw.wo_mlp.as_slice_mut().unwrap()));
        }
        out.push(("final_norm".into(), self.final_norm.as_slice_mut().unwrap()));
        if let Some(d) = &mut self.decoder {
            out.push(("head.decoder".into(), d.as_slice_mut().unwrap()));
        }
        out
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&str, &mut [T])) {
        for (name, data) in self.tensors_mut() {
            f(&name, data);
        }
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Fills tensors from flat buffers in canonical order, checking sizes
    /// against `cfg`.
    pub fn from_flat(cfg: &EncoderConfig, mut tensors: Vec<(String, Vec<T>)>) -> Result<Self> {
        let shapes = cfg.param_shapes();
        if shapes.len() != tensors.len() {
            return Err(Error::input(format!(
                "expected {} tensors, found {}",
                shapes.len(),
                tensors.len()
            )));
        }
        let mut w = Self::zeros(cfg);
        let mut err = None;
        for ((name, dst), ((src_name, src), (_, shape))) in
            w.tensors_mut().into_iter().zip(tensors.iter_mut().zip(&shapes))
        {
            if name != *src_name || dst.len() != src.len() || shape.iter().product::<usize>() != src.len() {
                err = Some(Error::input(format!("tensor {src_name:?} does not match expected {name:?} {shape:?}")));
                break;
            }
            dst.copy_from_slice(src);
        }
        match err {
            Some(e) => Err(e),
            None => Ok(w),
        }
    }

    pub fn cast<U: Real>(&self) -> EncoderWeights<U> {
        let c1 = |a: &Array1<T>| a.mapv(|x| U::lit(x.as_f64()));
        let c2 = |a: &Array2<T>| a.mapv(|x| U::lit(x.as_f64()));
        EncoderWeights {
            tok_embed: c2(&self.tok_embed),
            layers: self
                .layers
                .iter()
                .map(|l| LayerWeights {
                    attn_norm: c1(&l.attn_norm),
                    wqkv: c2(&l.wqkv),
                    wo: c2(&l.wo),
                    mlp_norm: c1(&l.mlp_norm),
                    wi: c2(&l.wi),
                    wo_mlp: c2(&l.wo_mlp),
                })
                .collect(),
            final_norm: c1(&self.final_norm),
            decoder: self.decoder.as_ref().map(c2),
        }
    }

    /// Output projection used for logits.
    pub fn output_projection(&self) -> &Array2<T> {
        self.decoder.as_ref().unwrap_or(&self.tok_embed)
    }
}

fn slice<T>(a: &Array2<T>) -> &[T] {
    a.as_slice().expect("standard layout")
}

fn truncated_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        // Box-Muller
        let u1: f64 = rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if z.abs() <= 3.0 {
            return z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_list_matches_config_shapes() {
        for tie in [true, false] {
            let cfg = EncoderConfig {
                tie_embeddings: tie,
                ..EncoderConfig::toy()
            };
            let w = EncoderWeights::<f64>::init(&cfg, 1);
            let shapes = cfg.param_shapes();
            let tensors = w.tensors();
            assert_eq!(shapes.len(), tensors.len());
            for ((n1, s), (n2, t)) in shapes.iter().zip(&tensors) {
                assert_eq!(n1, n2);
                assert_eq!(s.iter().product::<usize>(), t.len());
            }
            assert_eq!(w.num_params() as u64, cfg.param_count());
        }
    }

    #[test]
    fn init_is_seeded() {
        let cfg = EncoderConfig::toy();
        assert_eq!(EncoderWeights::<f64>::init(&cfg, 3), EncoderWeights::<f64>::init(&cfg, 3));
        assert_ne!(EncoderWeights::<f64>::init(&cfg, 3), EncoderWeights::<f64>::init(&cfg, 4));
        let w = EncoderWeights::<f64>::init(&cfg, 3);
        assert!(w.final_norm.iter().all(|&g| g == 1.0));
    }
}
