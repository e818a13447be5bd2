//! Row-wise softmax and the cross-entropy loss over its output.
//!
//! Softmax is computed max-shifted, so arbitrarily large logits stay finite.
//! The loss returns the combined gradient with respect to the pre-softmax
//! logits, (probs - onehot) / N, which is the exact adjoint of the fused
//! softmax + cross-entropy composition.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Row-wise softmax of a [N, Z] logits tensor.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (n, z) = logits.dims2()?;
    if !logits.all_finite() {
        return Err(Error::Numeric("softmax received non-finite logits".into()));
    }
    let mut out = Tensor::zeros(&[n, z]);
    for row in 0..n {
        let src = &logits.data()[row * z..(row + 1) * z];
        let max = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dst = &mut out.data_mut()[row * z..(row + 1) * z];
        let mut sum = 0.0;
        for (d, &v) in dst.iter_mut().zip(src) {
            *d = (v - max).exp();
            sum += *d;
        }
        for d in dst.iter_mut() {
            *d /= sum;
        }
    }
    Ok(out)
}

/// Mean negative log-probability of the true class, plus the gradient with
/// respect to the logits that produced `probs` via `softmax`.
pub fn cross_entropy_loss(probs: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (n, z) = probs.dims2()?;
    if labels.len() != n {
        return Err(Error::dimension(format!(
            "label count {} does not match batch axis (N={})",
            labels.len(),
            n
        )));
    }
    for (row, &label) in labels.iter().enumerate() {
        if label >= z {
            return Err(Error::Index(format!(
                "label {} at row {} is out of range for {} classes",
                label, row, z
            )));
        }
    }
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(&[n, z]);
    let inv_n = 1.0 / n as f64;
    for (row, &label) in labels.iter().enumerate() {
        let p = &probs.data()[row * z..(row + 1) * z];
        loss -= p[label].ln();
        let g = &mut grad.data_mut()[row * z..(row + 1) * z];
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = (p[j] - if j == label { 1.0 } else { 0.0 }) * inv_n;
        }
    }
    Ok((loss * inv_n, grad))
}

/// Index of the largest entry per row.
pub fn argmax_rows(probs: &Tensor) -> Result<Vec<usize>> {
    let (n, z) = probs.dims2()?;
    Ok((0..n)
        .map(|row| {
            let p = &probs.data()[row * z..(row + 1) * z];
            let mut best = 0;
            for j in 1..z {
                if p[j] > p[best] {
                    best = j;
                }
            }
            best
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_uniform_probs() {
        let logits = Tensor::zeros(&[1, 4]);
        let p = softmax(&logits).unwrap();
        for &v in p.data() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn huge_logits_stay_finite() {
        let logits = Tensor::from_vec(&[1, 2], vec![1000.0, 0.0]).unwrap();
        let p = softmax(&logits).unwrap();
        assert!(p.all_finite());
        assert!((p.data()[0] - 1.0).abs() < 1e-12);
        assert!(p.data()[1] < 1e-12);
    }

    #[test]
    fn log_spaced_logits() {
        let logits =
            Tensor::from_vec(&[1, 3], vec![1.0_f64.ln(), 2.0_f64.ln(), 3.0_f64.ln()]).unwrap();
        let p = softmax(&logits).unwrap();
        let expect = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        for (a, e) in p.data().iter().zip(expect) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_logits_rejected() {
        let logits = Tensor::from_vec(&[1, 2], vec![f64::NAN, 0.0]).unwrap();
        assert!(matches!(softmax(&logits).unwrap_err(), Error::Numeric(_)));
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let probs = Tensor::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let (loss, _) = cross_entropy_loss(&probs, &[1]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn uniform_probs_loss_is_ln_z() {
        let probs = Tensor::filled(&[2, 4], 0.25);
        let (loss, _) = cross_entropy_loss(&probs, &[0, 3]).unwrap();
        assert!((loss - 4.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn combined_gradient_formula() {
        let logits = Tensor::from_vec(&[2, 3], vec![0.3, -0.1, 1.2, 0.0, 0.5, -0.5]).unwrap();
        let probs = softmax(&logits).unwrap();
        let (_, grad) = cross_entropy_loss(&probs, &[2, 0]).unwrap();
        for row in 0..2 {
            for j in 0..3 {
                let onehot = if (row == 0 && j == 2) || (row == 1 && j == 0) { 1.0 } else { 0.0 };
                let expect = (probs.data()[row * 3 + j] - onehot) / 2.0;
                assert!((grad.data()[row * 3 + j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn out_of_range_label_is_index_error() {
        let probs = Tensor::filled(&[1, 3], 1.0 / 3.0);
        assert!(matches!(
            cross_entropy_loss(&probs, &[3]).unwrap_err(),
            Error::Index(_)
        ));
    }
}
