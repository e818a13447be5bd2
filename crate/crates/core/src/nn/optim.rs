//! SGD with classical momentum: v <- momentum * v + g; p <- p - lr * v.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn sgd_step(
    param: &mut Tensor,
    grad: &Tensor,
    lr: f64,
    momentum: f64,
    velocity: &mut Tensor,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != velocity.shape() {
        return Err(Error::dimension(format!(
            "sgd_step shapes disagree: param {:?}, grad {:?}, velocity {:?}",
            param.shape(),
            grad.shape(),
            velocity.shape()
        )));
    }
    if !(lr >= 0.0) {
        return Err(Error::Argument(format!("learning rate must be >= 0, got {lr}")));
    }
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::Argument(format!(
            "momentum must lie in [0, 1), got {momentum}"
        )));
    }
    let v = velocity.data_mut();
    let p = param.data_mut();
    for i in 0..p.len() {
        v[i] = momentum * v[i] + grad.data()[i];
        p[i] -= lr * v[i];
    }
    Ok(())
}
