//! 2-D convolution (cross-correlation) with stride and per-side zero padding.
//!
//! The kernel is applied without flipping: output(d, l, m) sums
//! k(d, c, i, j) * input(c, S*l - padTop + i, S*m - padLeft + j) over c, i, j.
//! Out-of-range taps read zero. Stride-2 instances of this layer do the
//! downsampling in the network; there is no pooling anywhere.
//!
//! The forward pass lowers each sample to a column matrix (im2col) and runs
//! one GEMM per sample; the backward pass is the exact adjoint, built from
//! the transposed GEMMs plus col2im scatter-add. Samples are processed
//! independently so a batch-parallel schedule would be a drop-in change.

use crate::error::{Error, Result};
use crate::tensor::{gemm, gemm_nt, gemm_tn, Tensor};

/// Per-side zero padding, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pad2d {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Pad2d {
    pub const ZERO: Pad2d = Pad2d { top: 0, bottom: 0, left: 0, right: 0 };

    pub fn uniform(p: usize) -> Pad2d {
        Pad2d { top: p, bottom: p, left: p, right: p }
    }

    /// Symmetric padding of (k-1)/2 on every side. For odd kernels on even
    /// inputs this makes a stride-2 convolution halve the spatial extent
    /// exactly, for any kernel size.
    pub fn same_for_kernel(k: usize) -> Pad2d {
        Pad2d::uniform((k.max(1) - 1) / 2)
    }
}

/// Gradients produced by `conv2d_backward`; each tensor matches the shape
/// of the forward-pass argument it differentiates.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub kernel: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

struct ConvGeometry {
    batch: usize,
    in_c: usize,
    in_h: usize,
    in_w: usize,
    out_c: usize,
    ky: usize,
    kx: usize,
    out_h: usize,
    out_w: usize,
}

fn geometry(
    input: &Tensor,
    kernel: &Tensor,
    stride: usize,
    pad: Pad2d,
) -> Result<ConvGeometry> {
    let (batch, in_c, in_h, in_w) = input.dims4()?;
    let (out_c, kc, ky, kx) = kernel.dims4().map_err(|_| {
        Error::dimension(format!(
            "kernel must be 4-D [filters, channels, ky, kx], got shape {:?}",
            kernel.shape()
        ))
    })?;
    if kc != in_c {
        return Err(Error::dimension(format!(
            "input channel axis (C={}) does not match kernel channel axis (C={})",
            in_c, kc
        )));
    }
    if stride == 0 {
        return Err(Error::Argument("stride must be a positive integer".into()));
    }
    let padded_h = in_h + pad.top + pad.bottom;
    let padded_w = in_w + pad.left + pad.right;
    if padded_h < ky || padded_w < kx {
        return Err(Error::dimension(format!(
            "padded spatial extent {}x{} is smaller than kernel extent {}x{}",
            padded_h, padded_w, ky, kx
        )));
    }
    let out_h = (padded_h - ky) / stride + 1;
    let out_w = (padded_w - kx) / stride + 1;
    Ok(ConvGeometry { batch, in_c, in_h, in_w, out_c, ky, kx, out_h, out_w })
}

/// Lowers one CHW sample into a (C*ky*kx) x (outH*outW) column matrix.
fn im2col(
    sample: &[f64],
    geo: &ConvGeometry,
    stride: usize,
    pad: Pad2d,
    cols: &mut [f64],
) {
    let (in_h, in_w) = (geo.in_h, geo.in_w);
    let (out_h, out_w) = (geo.out_h, geo.out_w);
    let out_hw = out_h * out_w;
    for c in 0..geo.in_c {
        let plane = &sample[c * in_h * in_w..(c + 1) * in_h * in_w];
        for dy in 0..geo.ky {
            for dx in 0..geo.kx {
                let row = ((c * geo.ky + dy) * geo.kx + dx) * out_hw;
                for oy in 0..out_h {
                    let iy = (oy * stride + dy) as isize - pad.top as isize;
                    let dst = row + oy * out_w;
                    if iy < 0 || iy >= in_h as isize {
                        cols[dst..dst + out_w].fill(0.0);
                        continue;
                    }
                    let src_row = iy as usize * in_w;
                    for ox in 0..out_w {
                        let ix = (ox * stride + dx) as isize - pad.left as isize;
                        cols[dst + ox] = if ix < 0 || ix >= in_w as isize {
                            0.0
                        } else {
                            plane[src_row + ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of `im2col`: scatter-adds column gradients back onto the sample.
fn col2im(
    cols: &[f64],
    geo: &ConvGeometry,
    stride: usize,
    pad: Pad2d,
    sample: &mut [f64],
) {
    let (in_h, in_w) = (geo.in_h, geo.in_w);
    let (out_h, out_w) = (geo.out_h, geo.out_w);
    let out_hw = out_h * out_w;
    for c in 0..geo.in_c {
        let plane = &mut sample[c * in_h * in_w..(c + 1) * in_h * in_w];
        for dy in 0..geo.ky {
            for dx in 0..geo.kx {
                let row = ((c * geo.ky + dy) * geo.kx + dx) * out_hw;
                for oy in 0..out_h {
                    let iy = (oy * stride + dy) as isize - pad.top as isize;
                    if iy < 0 || iy >= in_h as isize {
                        continue;
                    }
                    let src_row = iy as usize * in_w;
                    for ox in 0..out_w {
                        let ix = (ox * stride + dx) as isize - pad.left as isize;
                        if ix >= 0 && ix < in_w as isize {
                            plane[src_row + ix as usize] += cols[row + oy * out_w + ox];
                        }
                    }
                }
            }
        }
    }
}

/// Strided cross-correlation of an NCHW batch with a [D, C, ky, kx] kernel
/// plus a per-filter bias. Output spatial size is
/// floor((H + padTop + padBottom - ky) / stride) + 1, same for width.
pub fn conv2d_forward(
    input: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: Pad2d,
) -> Result<Tensor> {
    let geo = geometry(input, kernel, stride, pad)?;
    if bias.shape() != [geo.out_c] {
        return Err(Error::dimension(format!(
            "bias shape {:?} does not match filter axis (D={})",
            bias.shape(),
            geo.out_c
        )));
    }
    let k = geo.in_c * geo.ky * geo.kx;
    let out_hw = geo.out_h * geo.out_w;
    let mut cols = vec![0.0; k * out_hw];
    let mut out = Tensor::zeros(&[geo.batch, geo.out_c, geo.out_h, geo.out_w]);
    let in_len = geo.in_c * geo.in_h * geo.in_w;
    let out_len = geo.out_c * out_hw;
    for n in 0..geo.batch {
        let sample = &input.data()[n * in_len..(n + 1) * in_len];
        im2col(sample, &geo, stride, pad, &mut cols);
        let out_sample = &mut out.data_mut()[n * out_len..(n + 1) * out_len];
        gemm(geo.out_c, k, out_hw, 1.0, kernel.data(), &cols, 0.0, out_sample);
        for d in 0..geo.out_c {
            let b = bias.data()[d];
            for v in &mut out_sample[d * out_hw..(d + 1) * out_hw] {
                *v += b;
            }
        }
    }
    Ok(out)
}

/// Exact adjoint of `conv2d_forward`. The bias gradient is the sum of
/// `output_grad` over batch and spatial axes per filter.
pub fn conv2d_backward(
    input: &Tensor,
    kernel: &Tensor,
    output_grad: &Tensor,
    stride: usize,
    pad: Pad2d,
) -> Result<ConvGrads> {
    let geo = geometry(input, kernel, stride, pad)?;
    let expected = [geo.batch, geo.out_c, geo.out_h, geo.out_w];
    if output_grad.shape() != expected {
        return Err(Error::dimension(format!(
            "output_grad shape {:?} does not match forward output shape {:?}",
            output_grad.shape(),
            expected
        )));
    }
    let k = geo.in_c * geo.ky * geo.kx;
    let out_hw = geo.out_h * geo.out_w;
    let in_len = geo.in_c * geo.in_h * geo.in_w;
    let out_len = geo.out_c * out_hw;

    let mut d_kernel = Tensor::zeros(kernel.shape());
    let mut d_bias = Tensor::zeros(&[geo.out_c]);
    let mut d_input = Tensor::zeros(input.shape());
    let mut cols = vec![0.0; k * out_hw];
    let mut d_cols = vec![0.0; k * out_hw];

    for n in 0..geo.batch {
        let sample = &input.data()[n * in_len..(n + 1) * in_len];
        let d_out = &output_grad.data()[n * out_len..(n + 1) * out_len];

        im2col(sample, &geo, stride, pad, &mut cols);
        // dK[D,k] += dOut[D,hw] * cols[k,hw]^T, accumulated over the batch.
        gemm_nt(geo.out_c, out_hw, k, 1.0, d_out, &cols, 1.0, d_kernel.data_mut());

        for d in 0..geo.out_c {
            d_bias.data_mut()[d] += d_out[d * out_hw..(d + 1) * out_hw].iter().sum::<f64>();
        }

        // dCols[k,hw] = K[D,k]^T * dOut[D,hw], then scattered back.
        gemm_tn(k, geo.out_c, out_hw, 1.0, kernel.data(), d_out, 0.0, &mut d_cols);
        col2im(&d_cols, &geo, stride, pad, &mut d_input.data_mut()[n * in_len..(n + 1) * in_len]);
    }

    Ok(ConvGrads { kernel: d_kernel, bias: d_bias, input: d_input })
}
