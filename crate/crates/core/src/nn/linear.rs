//! Fully-connected (affine) layer: out[N, Fout] = x[N, Fin] * W^T + b.

use crate::error::{Error, Result};
use crate::tensor::{gemm, gemm_nt, gemm_tn, Tensor};

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub weight: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

fn check(input: &Tensor, weight: &Tensor, bias_len: Option<usize>) -> Result<(usize, usize, usize)> {
    let (n, f_in) = input.dims2()?;
    let (f_out, wf_in) = weight.dims2()?;
    if wf_in != f_in {
        return Err(Error::dimension(format!(
            "input feature axis (Fin={}) does not match weight feature axis (Fin={})",
            f_in, wf_in
        )));
    }
    if let Some(bl) = bias_len {
        if bl != f_out {
            return Err(Error::dimension(format!(
                "bias length {} does not match output feature axis (Fout={})",
                bl, f_out
            )));
        }
    }
    Ok((n, f_in, f_out))
}

pub fn linear_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, f_in, f_out) = check(input, weight, Some(bias.len()))?;
    let mut out = Tensor::zeros(&[n, f_out]);
    gemm_nt(n, f_in, f_out, 1.0, input.data(), weight.data(), 0.0, out.data_mut());
    for row in 0..n {
        for (j, b) in bias.data().iter().enumerate() {
            out.data_mut()[row * f_out + j] += b;
        }
    }
    Ok(out)
}

/// Exact adjoints: dW = dOut^T * x, db = column sums of dOut, dx = dOut * W.
pub fn linear_backward(
    input: &Tensor,
    weight: &Tensor,
    output_grad: &Tensor,
) -> Result<LinearGrads> {
    let (n, f_in, f_out) = check(input, weight, None)?;
    if output_grad.shape() != [n, f_out] {
        return Err(Error::dimension(format!(
            "output_grad shape {:?} does not match forward output shape [{}, {}]",
            output_grad.shape(),
            n,
            f_out
        )));
    }
    let mut d_weight = Tensor::zeros(&[f_out, f_in]);
    gemm_tn(f_out, n, f_in, 1.0, output_grad.data(), input.data(), 0.0, d_weight.data_mut());

    let mut d_bias = Tensor::zeros(&[f_out]);
    for row in 0..n {
        for j in 0..f_out {
            d_bias.data_mut()[j] += output_grad.data()[row * f_out + j];
        }
    }

    let mut d_input = Tensor::zeros(&[n, f_in]);
    gemm(n, f_out, f_in, 1.0, output_grad.data(), weight.data(), 0.0, d_input.data_mut());

    Ok(LinearGrads { weight: d_weight, bias: d_bias, input: d_input })
}
