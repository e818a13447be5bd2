//! Layer primitives: convolution, batch normalization, fully-connected,
//! softmax + cross-entropy, SGD, and the finite-difference gradient checker.
//!
//! Every operation is a pure function of its inputs with a hand-paired
//! exact backward pass; there is no autodiff graph.

pub mod batchnorm;
pub mod conv;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod optim;

pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormGrads, BatchNormState, Mode,
    BN_EPS, BN_MOMENTUM,
};
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads, Pad2d};
pub use gradcheck::{gradcheck, relative_discrepancy, DEFAULT_STEP};
pub use linear::{linear_backward, linear_forward, LinearGrads};
pub use loss::{argmax_rows, cross_entropy_loss, softmax};
pub use optim::sgd_step;
