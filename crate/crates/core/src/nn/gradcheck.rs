//! Central finite-difference gradient verification.
//!
//! Compares an analytic gradient against (f(x+h) - f(x-h)) / 2h elementwise
//! and reports the worst relative discrepancy |a - n| / max(1, |a|, |n|).

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Relative discrepancy between an analytic and a numerical value.
pub fn relative_discrepancy(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1.0_f64.max(analytic.abs()).max(numeric.abs())
}

/// Checks `analytic_grad` against central differences of `forward_fn` at
/// `point`, returning the maximum relative discrepancy over all elements.
pub fn gradcheck(
    forward_fn: impl Fn(&Tensor) -> Result<f64>,
    point: &Tensor,
    analytic_grad: &Tensor,
    h: f64,
) -> Result<f64> {
    if analytic_grad.shape() != point.shape() {
        return Err(Error::dimension(format!(
            "analytic gradient shape {:?} does not match point shape {:?}",
            analytic_grad.shape(),
            point.shape()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Argument(format!("step h must be positive, got {h}")));
    }
    let mut x = point.clone();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + h;
        let plus = forward_fn(&x)?;
        x.data_mut()[i] = orig - h;
        let minus = forward_fn(&x)?;
        x.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        worst = worst.max(relative_discrepancy(analytic_grad.data()[i], numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let point = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let coeffs = [2.0, 3.0, -1.0];
        let f = |x: &Tensor| Ok(x.data().iter().zip(coeffs).map(|(v, c)| v * c).sum());
        let grad = Tensor::from_vec(&[3], coeffs.to_vec()).unwrap();
        let d = gradcheck(f, &point, &grad, DEFAULT_STEP).unwrap();
        assert!(d < 1e-10, "discrepancy {d}");
    }

    #[test]
    fn quadratic_at_three() {
        let point = Tensor::from_vec(&[1], vec![3.0]).unwrap();
        let f = |x: &Tensor| Ok(x.data()[0] * x.data()[0]);
        let grad = Tensor::from_vec(&[1], vec![6.0]).unwrap();
        let d = gradcheck(f, &point, &grad, DEFAULT_STEP).unwrap();
        assert!(d < 1e-9, "discrepancy {d}");
    }

    #[test]
    fn planted_fault_is_detected() {
        let point = Tensor::from_vec(&[1], vec![3.0]).unwrap();
        let f = |x: &Tensor| Ok(x.data()[0] * x.data()[0]);
        let wrong = Tensor::from_vec(&[1], vec![12.0]).unwrap(); // true grad x2
        let d = gradcheck(f, &point, &wrong, DEFAULT_STEP).unwrap();
        assert!((d - 0.5).abs() < 1e-6, "expected ~0.5, got {d}");
    }
}
