//! Elementwise activation functions with exact analytic derivatives.
//!
//! Six kinds are provided: sigmoid, tanh, ReLU, ELU, leaky ReLU, and the
//! refined ReLU (RReLU)
//!
//!   rrelu(x) = sigmoid(x) * (1 + alpha * x)   for x < 0
//!   rrelu(x) = sigmoid(x) * (1 + x)           for x >= 0
//!
//! which gates a leaky-linear ramp through a sigmoid so that negative
//! inputs keep a nonzero gradient (no dying units) while positive inputs
//! grow roughly linearly (no saturation). Evaluation always goes through
//! the sigmoid factorization with a sign-branched sigmoid; the expanded
//! rational form e^x(1 + x)/(1 + e^x) would overflow long before the
//! factored form loses accuracy.
//!
//! Derivatives are the true elementwise derivatives of the forward maps,
//! verified against central finite differences in the test suite. For the
//! ReLU family the derivative at exactly 0 takes the x >= 0 branch (the
//! conventional subgradient choice); RReLU needs no convention for its
//! value at 0 since both forward branches meet at 1/2 and the right-hand
//! derivative there is 3/4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_RRELU_ALPHA: f64 = 0.1;
pub const DEFAULT_LEAKY_ALPHA: f64 = 0.1;
pub const DEFAULT_ELU_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Relu,
    Elu { alpha: f64 },
    LeakyRelu { alpha: f64 },
    Rrelu { alpha: f64 },
}

impl ActivationKind {
    pub fn elu() -> ActivationKind {
        ActivationKind::Elu { alpha: DEFAULT_ELU_ALPHA }
    }

    pub fn leaky_relu() -> ActivationKind {
        ActivationKind::LeakyRelu { alpha: DEFAULT_LEAKY_ALPHA }
    }

    pub fn rrelu() -> ActivationKind {
        ActivationKind::Rrelu { alpha: DEFAULT_RRELU_ALPHA }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::Elu { .. } => "elu",
            ActivationKind::LeakyRelu { .. } => "leaky_relu",
            ActivationKind::Rrelu { .. } => "rrelu",
        }
    }

    /// The slope parameter must be strictly positive where one exists.
    pub fn validate(&self) -> Result<()> {
        let alpha = match self {
            ActivationKind::Elu { alpha }
            | ActivationKind::LeakyRelu { alpha }
            | ActivationKind::Rrelu { alpha } => *alpha,
            _ => return Ok(()),
        };
        if alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "activation `{}` requires alpha > 0, got {}",
                self.name(),
                alpha
            )))
        }
    }
}

/// Numerically stable logistic sigmoid (branches on the sign of x so that
/// no intermediate exponential overflows).
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// sigmoid(x) * (1 - sigmoid(x)) without cancellation on either tail.
fn sigmoid_prime(x: f64) -> f64 {
    if x >= 0.0 {
        let em = (-x).exp();
        em / ((1.0 + em) * (1.0 + em))
    } else {
        let e = x.exp();
        e / ((1.0 + e) * (1.0 + e))
    }
}

pub fn forward_scalar(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sigmoid => sigmoid(x),
        ActivationKind::Tanh => x.tanh(),
        ActivationKind::Relu => {
            if x < 0.0 {
                0.0
            } else {
                x
            }
        }
        ActivationKind::Elu { alpha } => {
            if x < 0.0 {
                alpha * (x.exp() - 1.0)
            } else {
                x
            }
        }
        ActivationKind::LeakyRelu { alpha } => {
            if x < 0.0 {
                alpha * x
            } else {
                x
            }
        }
        ActivationKind::Rrelu { alpha } => {
            let ramp = if x < 0.0 { alpha * x } else { x };
            sigmoid(x) * (1.0 + ramp)
        }
    }
}

pub fn derivative_scalar(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sigmoid => sigmoid_prime(x),
        ActivationKind::Tanh => {
            let t = x.tanh();
            1.0 - t * t
        }
        ActivationKind::Relu => {
            if x < 0.0 {
                0.0
            } else {
                1.0
            }
        }
        ActivationKind::Elu { alpha } => {
            if x < 0.0 {
                alpha * x.exp()
            } else {
                1.0
            }
        }
        ActivationKind::LeakyRelu { alpha } => {
            if x < 0.0 {
                alpha
            } else {
                1.0
            }
        }
        ActivationKind::Rrelu { alpha } => {
            // d/dx [sigmoid(x) * (1 + ramp(x))] with ramp' = alpha (x < 0) or 1.
            let s = sigmoid(x);
            let sp = sigmoid_prime(x);
            if x < 0.0 {
                sp * (1.0 + alpha * x) + alpha * s
            } else {
                sp * (1.0 + x) + s
            }
        }
    }
}

fn check_finite(kind: ActivationKind, x: &Tensor) -> Result<()> {
    kind.validate()?;
    if x.all_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "activation `{}` received non-finite input",
            kind.name()
        )))
    }
}

/// Elementwise forward application.
pub fn act_forward(kind: ActivationKind, x: &Tensor) -> Result<Tensor> {
    check_finite(kind, x)?;
    Ok(x.map(|v| forward_scalar(kind, v)))
}

/// Elementwise derivative, evaluated at the forward input.
pub fn act_derivative(kind: ActivationKind, x: &Tensor) -> Result<Tensor> {
    check_finite(kind, x)?;
    Ok(x.map(|v| derivative_scalar(kind, v)))
}

/// Chain rule through the activation: output_grad ⊙ derivative(x).
pub fn act_backward(kind: ActivationKind, x: &Tensor, output_grad: &Tensor) -> Result<Tensor> {
    if x.shape() != output_grad.shape() {
        return Err(Error::dimension(format!(
            "output_grad shape {:?} does not match input shape {:?}",
            output_grad.shape(),
            x.shape()
        )));
    }
    let deriv = act_derivative(kind, x)?;
    let data = deriv
        .data()
        .iter()
        .zip(output_grad.data())
        .map(|(d, g)| d * g)
        .collect();
    Tensor::from_vec(x.shape(), data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub forward: f64,
    pub derivative: f64,
}

/// Uniformly samples the forward value and derivative over [x_min, x_max],
/// endpoints included.
pub fn activation_curve(
    kind: ActivationKind,
    x_min: f64,
    x_max: f64,
    steps: usize,
) -> Result<Vec<CurvePoint>> {
    kind.validate()?;
    if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::Argument(format!(
            "curve range must satisfy x_min < x_max with finite endpoints, got [{x_min}, {x_max}]"
        )));
    }
    if steps < 2 {
        return Err(Error::Argument(format!("curve needs at least 2 samples, got {steps}")));
    }
    let span = x_max - x_min;
    Ok((0..steps)
        .map(|i| {
            let x = x_min + span * i as f64 / (steps - 1) as f64;
            CurvePoint { x, forward: forward_scalar(kind, x), derivative: derivative_scalar(kind, x) }
        })
        .collect())
}

/// CSV rendering of a sampled curve: header `x,forward,derivative`, one row
/// per sample, 17 significant digits (enough to round-trip any f64).
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("x,forward,derivative\n");
    for p in points {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.x, p.forward, p.derivative));
    }
    out
}
