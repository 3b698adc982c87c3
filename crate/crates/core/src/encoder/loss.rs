use ndarray::{Array2, Axis};

use super::real::Real;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MlmLoss {
    /// Mean cross-entropy over labelled positions; 0 when there are none.
    pub loss: f64,
    pub masked: usize,
    /// Set when no position carried a label.
    pub no_targets: bool,
}

fn check(rows: usize, vocab: usize, labels: &[Option<u32>]) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::input(format!("{} labels for {rows} logit rows", labels.len())));
    }
    if let Some(bad) = labels.iter().flatten().find(|&&l| l as usize >= vocab) {
        return Err(Error::input(format!("label {bad} out of range for vocabulary of {vocab}")));
    }
    Ok(())
}

/// `log(sum(exp(row)))`, computed in f64.
pub fn log_sum_exp<T: Real>(row: impl Iterator<Item = T> + Clone) -> f64 {
    let max = row.clone().map(Real::as_f64).fold(f64::NEG_INFINITY, f64::max);
    max + row.map(|v| (v.as_f64() - max).exp()).sum::<f64>().ln()
}

/// Mean cross-entropy over positions whose label is `Some`.
pub fn mlm_loss<T: Real>(logits: &Array2<T>, labels: &[Option<u32>]) -> Result<MlmLoss> {
    check(logits.nrows(), logits.ncols(), labels)?;
    let mut total = 0.0;
    let mut masked = 0;
    for (row, label) in logits.axis_iter(Axis(0)).zip(labels) {
        if let Some(y) = label {
            total += log_sum_exp(row.iter().copied()) - row[*y as usize].as_f64();
            masked += 1;
        }
    }
    if masked == 0 {
        log::warn!("mlm_loss called without any masked position");
        return Ok(MlmLoss {
            loss: 0.0,
            masked: 0,
            no_targets: true,
        });
    }
    Ok(MlmLoss {
        loss: total / masked as f64,
        masked,
        no_targets: false,
    })
}

/// Loss and its gradient with respect to the logits.
pub fn mlm_loss_with_grad<T: Real>(logits: &Array2<T>, labels: &[Option<u32>]) -> Result<(MlmLoss, Array2<T>)> {
    let loss = mlm_loss(logits, labels)?;
    let mut grad = Array2::zeros(logits.dim());
    if loss.masked == 0 {
        return Ok((loss, grad));
    }
    let scale = 1.0 / loss.masked as f64;
    for ((row, mut g), label) in logits.axis_iter(Axis(0)).zip(grad.axis_iter_mut(Axis(0))).zip(labels) {
        let Some(y) = label else { continue };
        let lse = log_sum_exp(row.iter().copied());
        for (gv, &v) in g.iter_mut().zip(row) {
            *gv = T::lit((v.as_f64() - lse).exp() * scale);
        }
        g[*y as usize] -= T::lit(scale);
    }
    Ok((loss, grad))
}
