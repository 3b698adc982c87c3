use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub n_pairs: usize,
}

fn check(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::input(format!("{} values against {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::input("correlation needs at least two pairs"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::input("correlation inputs must be finite"));
    }
    Ok(())
}

/// Deviations scaled by `n`: `n x_i - sum(x)`. Avoids rounding the mean, so
/// a shift of every input by the same representable amount cancels exactly
/// whenever the sums themselves are exact.
fn scaled_deviations(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    xs.iter().map(|&x| n * x - sum).collect()
}

/// Product-moment correlation. Zero variance in either input is an error.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check(xs, ys)?;
    let (dx, dy) = (scaled_deviations(xs), scaled_deviations(ys));
    let sxy: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    let sxx: f64 = dx.iter().map(|a| a * a).sum();
    let syy: f64 = dy.iter().map(|b| b * b).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::input("correlation undefined: an input has zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their ranks.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check(xs, ys)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<CorrelationReport> {
    Ok(CorrelationReport {
        pearson_r: pearson(xs, ys)?,
        spearman_rho: spearman(xs, ys)?,
        n_pairs: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_and_reversed() {
        let xs = [1.0, 2.5, -3.0, 7.0, 0.25];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson(&xs, &up).unwrap(), 1.0);
        assert_eq!(pearson(&xs, &down).unwrap(), -1.0);
        assert_eq!(spearman(&xs, &up).unwrap(), 1.0);
        assert_eq!(spearman(&xs, &down).unwrap(), -1.0);
    }

    #[test]
    fn monotone_map_gives_unit_rho() {
        let xs = [0.1, 0.9, 0.3, 2.0, 1.4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.powi(3).exp()).collect();
        assert_eq!(spearman(&xs, &ys).unwrap(), 1.0);
    }

    #[test]
    fn tie_ranks() {
        assert_eq!(fractional_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn errors() {
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }
}
