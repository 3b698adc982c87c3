//! Independent reference implementations used as test oracles. Each one is
//! written the slow, obvious way and shares no code with the library beyond
//! the public weight containers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use modernzh_core::encoder::{EncoderConfig, EncoderWeights, LayerKind};
use modernzh_core::tokenizer::{is_punctuation, DefaultSegmenter, Lexicon, Segmenter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- encoder -------------------------------------------------------------

fn gelu_tanh(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

fn rms(x: &[f64], g: &[f64], eps: f64) -> Vec<f64> {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    x.iter().zip(g).map(|(v, g)| v / (ms + eps).sqrt() * g).collect()
}

fn matvec(x: &[f64], m: &ndarray::Array2<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|c| (0..m.nrows()).map(|r| x[r] * m[[r, c]]).sum()).collect()
}

/// Rotates one head vector: pair `(2i, 2i+1)` as a complex number times
/// `exp(i * m * theta^(-2i/d))`.
pub fn rotate(v: &[f64], m: usize, theta: f64) -> Vec<f64> {
    let d = v.len();
    let mut out = vec![0.0; d];
    for i in 0..d / 2 {
        let ang = m as f64 / theta.powf(2.0 * i as f64 / d as f64);
        let (re, im) = (v[2 * i], v[2 * i + 1]);
        out[2 * i] = re * ang.cos() - im * ang.sin();
        out[2 * i + 1] = re * ang.sin() + im * ang.cos();
    }
    out
}

/// Logits per sequence from a padded batch: every sequence is padded to the
/// longest with token 0 and a key mask hides padding.
pub fn padded_forward(w: &EncoderWeights<f64>, cfg: &EncoderConfig, seqs: &[Vec<u32>]) -> Vec<Vec<Vec<f64>>> {
    let lmax = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let (h, nh) = (cfg.hidden, cfg.heads);
    let d = h / nh;
    let inter = cfg.intermediate_size();
    let out_proj = w.decoder.as_ref().unwrap_or(&w.tok_embed);
    let mut result = Vec::new();
    for seq in seqs {
        let len = seq.len();
        let ids: Vec<u32> = (0..lmax).map(|i| if i < len { seq[i] } else { 0 }).collect();
        let mut x: Vec<Vec<f64>> = ids.iter().map(|&t| w.tok_embed.row(t as usize).to_vec()).collect();
        for (l, lw) in w.layers.iter().enumerate() {
            let global = cfg.layer_kind(l) == LayerKind::Global;
            let theta = if global { cfg.rope_theta_global } else { cfg.rope_theta_local };
            let allowed = |i: usize, j: usize| {
                j < len && (global || (i as i64 - j as i64).unsigned_abs() as usize <= cfg.local_window_radius)
            };
            let qkv: Vec<Vec<f64>> = x
                .iter()
                .map(|row| matvec(&rms(row, lw.attn_norm.as_slice().unwrap(), cfg.norm_eps), &lw.wqkv))
                .collect();
            let mut ctx = vec![vec![0.0; h]; lmax];
            for head in 0..nh {
                let q: Vec<Vec<f64>> = (0..lmax).map(|i| rotate(&qkv[i][head * d..(head + 1) * d], i, theta)).collect();
                let k: Vec<Vec<f64>> =
                    (0..lmax).map(|i| rotate(&qkv[i][h + head * d..h + (head + 1) * d], i, theta)).collect();
                for i in 0..lmax {
                    let scores: Vec<f64> = (0..lmax)
                        .map(|j| {
                            if allowed(i, j) {
                                q[i].iter().zip(&k[j]).map(|(a, b)| a * b).sum::<f64>() / (d as f64).sqrt()
                            } else {
                                f64::NEG_INFINITY
                            }
                        })
                        .collect();
                    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if m == f64::NEG_INFINITY {
                        // A padding query with no visible keys.
                        continue;
                    }
                    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                    let z: f64 = e.iter().sum();
                    for j in (0..lmax).filter(|&j| allowed(i, j)) {
                        for c in 0..d {
                            ctx[i][head * d + c] += e[j] / z * qkv[j][2 * h + head * d + c];
                        }
                    }
                }
            }
            for i in 0..lmax {
                let o = matvec(&ctx[i], &lw.wo);
                let mid: Vec<f64> = x[i].iter().zip(&o).map(|(a, b)| a + b).collect();
                let u = matvec(&rms(&mid, lw.mlp_norm.as_slice().unwrap(), cfg.norm_eps), &lw.wi);
                let hm: Vec<f64> = (0..inter).map(|c| gelu_tanh(u[c]) * u[inter + c]).collect();
                let mo = matvec(&hm, &lw.wo_mlp);
                x[i] = mid.iter().zip(&mo).map(|(a, b)| a + b).collect();
            }
        }
        result.push(
            (0..len)
                .map(|i| {
                    let hf = rms(&x[i], w.final_norm.as_slice().unwrap(), cfg.norm_eps);
                    (0..out_proj.nrows())
                        .map(|v| hf.iter().enumerate().map(|(c, a)| a * out_proj[[v, c]]).sum())
                        .collect()
                })
                .collect(),
        );
    }
    result
}

/// Attention scores one layer computes over a single sequence, by counting
/// allowed pairs one at a time.
pub fn count_pairs(len: usize, global: bool, radius: usize) -> u64 {
    let mut n = 0;
    for i in 0..len {
        for j in 0..len {
            if global || i.abs_diff(j) <= radius {
                n += 1;
            }
        }
    }
    n
}

// ---- tokenizer -----------------------------------------------------------

pub const SPECIALS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

pub struct BruteBpe {
    pub vocab: Vec<String>,
    pub merges: Vec<(String, String)>,
}

/// Textbook BPE: recount every pair from scratch after each merge, pick the
/// highest count with ties going to the lexicographically smallest pair.
pub fn brute_bpe(corpus: &[&str], target: usize) -> BruteBpe {
    let seg = DefaultSegmenter::new(Lexicon::default());
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for doc in corpus {
        for w in seg.segment(doc) {
            *counts.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    let split = |w: &str| -> Vec<String> {
        w.chars()
            .enumerate()
            .map(|(k, c)| if k == 0 { c.to_string() } else { format!("##{c}") })
            .collect()
    };
    let mut alphabet = BTreeSet::new();
    for w in counts.keys() {
        for c in w.chars() {
            alphabet.insert(c.to_string());
            if !is_punctuation(c) {
                alphabet.insert(format!("##{c}"));
            }
        }
    }
    let mut vocab: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    vocab.extend(alphabet);
    let mut words: Vec<(Vec<String>, u64)> = counts.iter().map(|(w, &n)| (split(w), n)).collect();
    let mut merges = Vec::new();
    while vocab.len() < target {
        let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (s, n) in &words {
            for p in s.windows(2) {
                *pairs.entry((p[0].clone(), p[1].clone())).or_insert(0) += n;
            }
        }
        let Some(best) = pairs
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(p, _)| p.clone())
        else {
            break;
        };
        let merged = format!("{}{}", best.0, &best.1[2..]);
        if !vocab.contains(&merged) {
            vocab.push(merged.clone());
        }
        for (s, _) in words.iter_mut() {
            *s = merge_all(s, &best, &merged);
        }
        merges.push(best);
    }
    BruteBpe { vocab, merges }
}

fn merge_all(s: &[String], pair: &(String, String), merged: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        if i + 1 < s.len() && s[i] == pair.0 && s[i + 1] == pair.1 {
            out.push(merged.to_string());
            i += 2;
        } else {
            out.push(s[i].clone());
            i += 1;
        }
    }
    out
}

/// Applies every merge in rank order to a single word's symbols.
pub fn apply_merges_in_order(word: &str, merges: &[(String, String)]) -> Vec<String> {
    let mut s: Vec<String> = word
        .chars()
        .enumerate()
        .map(|(k, c)| if k == 0 { c.to_string() } else { format!("##{c}") })
        .collect();
    for m in merges {
        let merged = format!("{}{}", m.0, &m.1[2..]);
        s = merge_all(&s, m, &merged);
    }
    s
}

// ---- corpus --------------------------------------------------------------

pub fn shingle_set(doc: &str, size: usize) -> HashSet<String> {
    let chars: Vec<char> = doc.chars().collect();
    if chars.len() <= size {
        return [doc.to_string()].into_iter().collect();
    }
    chars.windows(size).map(|w| w.iter().collect()).collect()
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 { 1.0 } else { inter as f64 / union as f64 }
}

/// Indices dropped by exact first-occurrence dedup: a document goes when
/// some earlier kept document reaches the threshold.
pub fn brute_dedup(docs: &[String], threshold: f64, size: usize) -> BTreeSet<usize> {
    let sets: Vec<HashSet<String>> = docs.iter().map(|d| shingle_set(d, size)).collect();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = BTreeSet::new();
    for i in 0..docs.len() {
        if kept.iter().any(|&j| jaccard(&sets[i], &sets[j]) >= threshold) {
            dropped.insert(i);
        } else {
            kept.push(i);
        }
    }
    dropped
}

pub fn random_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| char::from_u32(0x4E00 + rng.random_range(0..3000)).unwrap())
        .collect()
}

/// 500 documents. Every fifth one after the first few is a copy of an
/// earlier original with a short tail replaced, so the pair's shingle
/// Jaccard is about 0.9. Returns the docs and the planted copy indices.
pub fn planted_fixture(seed: u64) -> (Vec<String>, BTreeSet<usize>) {
    let mut r = rng(seed);
    let mut docs: Vec<String> = Vec::with_capacity(500);
    let mut originals: Vec<usize> = Vec::new();
    let mut planted = BTreeSet::new();
    for i in 0..500 {
        if i >= 10 && i % 5 == 0 {
            let src = originals[r.random_range(0..originals.len())];
            let chars: Vec<char> = docs[src].chars().collect();
            let keep = chars.len() - chars.len() / 19;
            let mut copy: String = chars[..keep].iter().collect();
            copy.push_str(&random_text(&mut r, chars.len() - keep));
            docs.push(copy);
            planted.insert(i);
        } else {
            let len = r.random_range(300..600);
            docs.push(random_text(&mut r, len));
            originals.push(i);
        }
    }
    (docs, planted)
}

// ---- metrics -------------------------------------------------------------

/// Pearson r from the textbook definition.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Average ranks (1-based) by counting smaller and equal elements.
pub fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_direct(x: &[f64], y: &[f64]) -> f64 {
    pearson_direct(&ranks_by_counting(x), &ranks_by_counting(y))
}
