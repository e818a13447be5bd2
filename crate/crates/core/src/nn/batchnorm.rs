//! Per-channel batch normalization over NCHW tensors.
//!
//! Train mode normalizes each channel with the batch statistics taken over
//! the batch and spatial axes (population variance), applies the learnable
//! gamma/beta affine, and folds the batch statistics into running estimates
//! by exponential moving average. Eval mode is a deterministic affine map
//! built from the running estimates and fails if none were ever recorded.
//!
//! The forward pass returns the updated running state instead of mutating
//! it, so repeated calls on the same inputs are pure.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Default variance-floor epsilon.
pub const BN_EPS: f64 = 1e-5;
/// Weight of the current batch in the running-statistics moving average.
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Running mean/variance estimates, one entry per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub initialized: bool,
}

impl BatchNormState {
    pub fn new(channels: usize) -> BatchNormState {
        BatchNormState {
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            initialized: false,
        }
    }
}

/// Batch statistics cached by a train-mode forward for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub input: Tensor,
}

fn check_shapes(input: &Tensor, gamma: &Tensor, beta: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let (n, c, h, w) = input.dims4()?;
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(Error::dimension(format!(
            "gamma/beta shapes {:?}/{:?} do not match channel axis (C={})",
            gamma.shape(),
            beta.shape(),
            c
        )));
    }
    Ok((n, c, h, w))
}

/// Forward pass. Returns the normalized output, the (possibly updated)
/// running state, and — in train mode — the batch statistics needed by
/// `batchnorm_backward`.
pub fn batchnorm_forward(
    input: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    eps: f64,
    mode: Mode,
    state: &BatchNormState,
) -> Result<(Tensor, BatchNormState, Option<BatchNormCache>)> {
    let (n, c, h, w) = check_shapes(input, gamma, beta)?;
    if state.running_mean.len() != c || state.running_var.len() != c {
        return Err(Error::dimension(format!(
            "running statistics track {} channels but input has C={}",
            state.running_mean.len(),
            c
        )));
    }
    let hw = h * w;
    let plane = c * hw;
    let mut out = Tensor::zeros(input.shape());

    match mode {
        Mode::Eval => {
            if !state.initialized {
                return Err(Error::State(
                    "eval-mode batch norm called with empty running statistics; \
                     run at least one training batch first"
                        .into(),
                ));
            }
            for ch in 0..c {
                let inv = 1.0 / (state.running_var[ch] + eps).sqrt();
                let (g, b, m) = (gamma.data()[ch], beta.data()[ch], state.running_mean[ch]);
                for s in 0..n {
                    let base = s * plane + ch * hw;
                    for i in 0..hw {
                        out.data_mut()[base + i] = g * (input.data()[base + i] - m) * inv + b;
                    }
                }
            }
            Ok((out, state.clone(), None))
        }
        Mode::Train => {
            let count = (n * hw) as f64;
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            for ch in 0..c {
                let mut sum = 0.0;
                for s in 0..n {
                    let base = s * plane + ch * hw;
                    for i in 0..hw {
                        sum += input.data()[base + i];
                    }
                }
                mean[ch] = sum / count;
                let mut sq = 0.0;
                for s in 0..n {
                    let base = s * plane + ch * hw;
                    for i in 0..hw {
                        let d = input.data()[base + i] - mean[ch];
                        sq += d * d;
                    }
                }
                var[ch] = sq / count;
            }
            for ch in 0..c {
                let inv = 1.0 / (var[ch] + eps).sqrt();
                let (g, b, m) = (gamma.data()[ch], beta.data()[ch], mean[ch]);
                for s in 0..n {
                    let base = s * plane + ch * hw;
                    for i in 0..hw {
                        out.data_mut()[base + i] = g * (input.data()[base + i] - m) * inv + b;
                    }
                }
            }
            let mut next = state.clone();
            if !next.initialized {
                next.running_mean.copy_from_slice(&mean);
                next.running_var.copy_from_slice(&var);
                next.initialized = true;
            } else {
                for ch in 0..c {
                    next.running_mean[ch] =
                        (1.0 - BN_MOMENTUM) * next.running_mean[ch] + BN_MOMENTUM * mean[ch];
                    next.running_var[ch] =
                        (1.0 - BN_MOMENTUM) * next.running_var[ch] + BN_MOMENTUM * var[ch];
                }
            }
            Ok((out, next, Some(BatchNormCache { mean, var })))
        }
    }
}

/// Exact adjoint of the train-mode forward pass, including the dependence
/// of the batch mean and variance on every input element:
///
///   dx = (gamma / sqrt(var+eps)) * (dy - mean(dy) - xhat * mean(dy*xhat))
///
/// with the means taken over batch and spatial positions of the channel.
pub fn batchnorm_backward(
    input: &Tensor,
    gamma: &Tensor,
    eps: f64,
    cache: &BatchNormCache,
    output_grad: &Tensor,
) -> Result<BatchNormGrads> {
    let (n, c, h, w) = input.dims4()?;
    if output_grad.shape() != input.shape() {
        return Err(Error::dimension(format!(
            "output_grad shape {:?} does not match input shape {:?}",
            output_grad.shape(),
            input.shape()
        )));
    }
    if gamma.shape() != [c] || cache.mean.len() != c {
        return Err(Error::dimension(format!(
            "gamma/cache channel count does not match input C={}",
            c
        )));
    }
    let hw = h * w;
    let plane = c * hw;
    let count = (n * hw) as f64;

    let mut d_gamma = Tensor::zeros(&[c]);
    let mut d_beta = Tensor::zeros(&[c]);
    let mut d_input = Tensor::zeros(input.shape());

    for ch in 0..c {
        let inv = 1.0 / (cache.var[ch] + eps).sqrt();
        let m = cache.mean[ch];
        let mut sum_dy = 0.0;
        let mut sum_dy_xhat = 0.0;
        for s in 0..n {
            let base = s * plane + ch * hw;
            for i in 0..hw {
                let dy = output_grad.data()[base + i];
                let xhat = (input.data()[base + i] - m) * inv;
                sum_dy += dy;
                sum_dy_xhat += dy * xhat;
            }
        }
        d_beta.data_mut()[ch] = sum_dy;
        d_gamma.data_mut()[ch] = sum_dy_xhat;
        let g = gamma.data()[ch];
        for s in 0..n {
            let base = s * plane + ch * hw;
            for i in 0..hw {
                let dy = output_grad.data()[base + i];
                let xhat = (input.data()[base + i] - m) * inv;
                d_input.data_mut()[base + i] =
                    g * inv * (dy - sum_dy / count - xhat * sum_dy_xhat / count);
            }
        }
    }
    Ok(BatchNormGrads { gamma: d_gamma, beta: d_beta, input: d_input })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_input(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_vec(shape, (0..shape.iter().product())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect())
        .unwrap()
    }

    #[test]
    fn constant_channel_normalizes_to_zero() {
        let input = Tensor::filled(&[2, 1, 3, 3], 4.2);
        let gamma = Tensor::filled(&[1], 1.0);
        let beta = Tensor::zeros(&[1]);
        let state = BatchNormState::new(1);
        let (out, _, _) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        assert!(out.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_gamma_broadcasts_beta() {
        let input = random_input(&[2, 3, 2, 2], 11);
        let gamma = Tensor::zeros(&[3]);
        let beta = Tensor::from_vec(&[3], vec![-1.0, 0.5, 2.0]).unwrap();
        let state = BatchNormState::new(3);
        let (out, _, _) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        let (_, c, h, w) = input.dims4().unwrap();
        for s in 0..2 {
            for ch in 0..c {
                for i in 0..h * w {
                    assert_eq!(out.data()[(s * c + ch) * h * w + i], beta.data()[ch]);
                }
            }
        }
    }

    #[test]
    fn batch_statistics_are_standardized() {
        let input = random_input(&[4, 3, 5, 5], 3);
        let gamma = Tensor::filled(&[3], 1.0);
        let beta = Tensor::zeros(&[3]);
        let state = BatchNormState::new(3);
        let (out, _, _) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        let (n, c, h, w) = input.dims4().unwrap();
        let count = (n * h * w) as f64;
        for ch in 0..c {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for s in 0..n {
                for i in 0..h * w {
                    let v = out.data()[(s * c + ch) * h * w + i];
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / count;
            let var = sq / count - mean * mean;
            assert!(mean.abs() < 1e-9, "channel {ch} mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "channel {ch} var {var}");
        }
    }

    #[test]
    fn eval_without_stats_is_a_state_error() {
        let input = Tensor::zeros(&[1, 2, 2, 2]);
        let gamma = Tensor::filled(&[2], 1.0);
        let beta = Tensor::zeros(&[2]);
        let state = BatchNormState::new(2);
        let err = batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Eval, &state).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn eval_is_deterministic_affine() {
        let input = random_input(&[2, 2, 3, 3], 5);
        let gamma = Tensor::from_vec(&[2], vec![1.5, 0.7]).unwrap();
        let beta = Tensor::from_vec(&[2], vec![0.1, -0.2]).unwrap();
        let state = BatchNormState::new(2);
        let (_, trained, _) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        let probe = random_input(&[3, 2, 3, 3], 6);
        let (a, _, _) =
            batchnorm_forward(&probe, &gamma, &beta, BN_EPS, Mode::Eval, &trained).unwrap();
        let (b, _, _) =
            batchnorm_forward(&probe, &gamma, &beta, BN_EPS, Mode::Eval, &trained).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn running_stats_first_batch_then_ema() {
        let input = Tensor::filled(&[1, 1, 2, 2], 3.0);
        let gamma = Tensor::filled(&[1], 1.0);
        let beta = Tensor::zeros(&[1]);
        let state = BatchNormState::new(1);
        let (_, s1, _) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        assert_eq!(s1.running_mean[0], 3.0);
        assert_eq!(s1.running_var[0], 0.0);
        let input2 = Tensor::filled(&[1, 1, 2, 2], 5.0);
        let (_, s2, _) =
            batchnorm_forward(&input2, &gamma, &beta, BN_EPS, Mode::Train, &s1).unwrap();
        assert!((s2.running_mean[0] - (0.9 * 3.0 + 0.1 * 5.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_output_grad_gives_zero_grads() {
        let input = random_input(&[2, 3, 4, 4], 9);
        let gamma = Tensor::filled(&[3], 1.3);
        let beta = Tensor::zeros(&[3]);
        let state = BatchNormState::new(3);
        let (_, _, cache) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        let zeros = Tensor::zeros(input.shape());
        let grads =
            batchnorm_backward(&input, &gamma, BN_EPS, cache.as_ref().unwrap(), &zeros).unwrap();
        assert!(grads.gamma.data().iter().all(|&v| v == 0.0));
        assert!(grads.beta.data().iter().all(|&v| v == 0.0));
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
        assert_eq!(grads.gamma.shape(), gamma.shape());
        assert_eq!(grads.input.shape(), input.shape());
    }

    #[test]
    fn gamma_gradient_is_sum_of_dy_times_xhat() {
        let input = random_input(&[2, 2, 3, 3], 21);
        let gamma = Tensor::filled(&[2], 0.8);
        let beta = Tensor::zeros(&[2]);
        let state = BatchNormState::new(2);
        let (_, _, cache) =
            batchnorm_forward(&input, &gamma, &beta, BN_EPS, Mode::Train, &state).unwrap();
        let cache = cache.unwrap();
        let dy = random_input(&[2, 2, 3, 3], 22);
        let grads = batchnorm_backward(&input, &gamma, BN_EPS, &cache, &dy).unwrap();
        let (n, c, h, w) = input.dims4().unwrap();
        for ch in 0..c {
            let inv = 1.0 / (cache.var[ch] + BN_EPS).sqrt();
            let mut expect = 0.0;
            for s in 0..n {
                for i in 0..h * w {
                    let idx = (s * c + ch) * h * w + i;
                    expect += dy.data()[idx] * (input.data()[idx] - cache.mean[ch]) * inv;
                }
            }
            assert!((grads.gamma.data()[ch] - expect).abs() < 1e-12);
        }
    }
}
