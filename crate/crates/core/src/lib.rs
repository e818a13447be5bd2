//! Micro-expression recognition numerics: active-imaging video
//! summarization, a six-member activation family with analytic
//! derivatives, the OrigiNet shallow CNN built on a self-contained dense
//! tensor engine, and a leave-one-subject-out training/evaluation harness.
//!
//! Everything runs in double precision on the CPU and is deterministic
//! under fixed seeds; every backward pass is hand-paired with its forward
//! pass and validated against central finite differences.

pub mod activations;
pub mod active_imaging;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod imagebuf;
pub mod model;
pub mod nn;
pub mod tensor;

pub use activations::ActivationKind;
pub use active_imaging::{ActiveImage, ActiveImagingOptions, FrameSequence, Ft1Mode};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use imagebuf::Image;
pub use model::{ModelConfig, OrigiNet};
pub use tensor::Tensor;
