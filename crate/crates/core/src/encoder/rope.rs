//! Rotary position embeddings.
//!
//! Dimension pair `(2i, 2i + 1)` of a head vector at position `m` is rotated
//! by `m * theta^(-2i / head_dim)`. Angles are computed in f64 regardless of
//! the element type.

use ndarray::Array2;

use super::real::Real;
use crate::error::{Error, Result};

pub fn inverse_frequencies(head_dim: usize, theta: f64) -> Vec<f64> {
    (0..head_dim / 2)
        .map(|i| theta.powf(-(2.0 * i as f64) / head_dim as f64))
        .collect()
}

/// Rotates `data`, laid out as `[token][head][head_dim]`, in place. With
/// `inverse` the rotation is undone (used by the backward pass).
pub(crate) fn rotate_heads<T: Real>(
    data: &mut [T],
    heads: usize,
    head_dim: usize,
    positions: &[usize],
    theta: f64,
    inverse: bool,
) {
    let freqs = inverse_frequencies(head_dim, theta);
    let width = heads * head_dim;
    let sign = if inverse { -1.0 } else { 1.0 };
    let mut cos = vec![T::zero(); freqs.len()];
    let mut sin = vec![T::zero(); freqs.len()];
    for (t, row) in data.chunks_exact_mut(width).enumerate() {
        let m = positions[t] as f64;
        for (i, &f) in freqs.iter().enumerate() {
            let angle = m * f;
            cos[i] = T::lit(angle.cos());
            sin[i] = T::lit(sign * angle.sin());
        }
        for head in row.chunks_exact_mut(head_dim) {
            for (i, pair) in head.chunks_exact_mut(2).enumerate() {
                let (a, b) = (pair[0], pair[1]);
                pair[0] = a * cos[i] - b * sin[i];
                pair[1] = a * sin[i] + b * cos[i];
            }
        }
    }
}

/// Rotates each row of `vectors` (one head vector per row) by its position.
pub fn rope_rotate<T: Real>(vectors: &Array2<T>, positions: &[usize], theta: f64) -> Result<Array2<T>> {
    let (rows, dim) = vectors.dim();
    if dim % 2 != 0 {
        return Err(Error::config(format!("rotary embedding needs an even head_dim, got {dim}")));
    }
    if positions.len() != rows {
        return Err(Error::input("one position per vector required"));
    }
    let mut out = vectors.as_standard_layout().into_owned();
    rotate_heads(out.as_slice_mut().expect("standard layout"), 1, dim, positions, theta, false);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn position_zero_is_identity() {
        let v = array![[0.3, -1.2, 4.0, 0.5]];
        assert_eq!(rope_rotate(&v, &[0], 10_000.0).unwrap(), v);
    }

    #[test]
    fn two_dims_rotate_by_position_radians() {
        let v = array![[1.0, 0.0]];
        for m in [1usize, 2, 7] {
            let r = rope_rotate(&v, &[m], 10_000.0).unwrap();
            assert!((r[[0, 0]] - (m as f64).cos()).abs() < 1e-15);
            assert!((r[[0, 1]] - (m as f64).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn odd_dim_rejected() {
        let v = array![[1.0, 0.0, 2.0]];
        assert!(matches!(rope_rotate(&v, &[0], 10_000.0), Err(Error::Config(_))));
    }

    #[test]
    fn inverse_undoes_rotation() {
        let mut data = vec![0.1f64, 0.2, -0.3, 0.4, 1.0, -2.0, 0.5, 0.25];
        let orig = data.clone();
        rotate_heads(&mut data, 2, 2, &[3, 11], 80_000.0, false);
        rotate_heads(&mut data, 2, 2, &[3, 11], 80_000.0, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
