//! The OrigiNet architecture: a shallow stack of hybrid feature blocks
//! feeding an augmented learning head.
//!
//! Each hybrid block runs two parallel stride-2 convolutions over the same
//! input — one with the small kernel, one with the large — activates each
//! branch, sums them elementwise, and batch-normalizes the sum. Stride-2
//! convolution is the only downsampling mechanism; there is no pooling.
//! After the last block the feature map is flattened and fed to two
//! parallel fully-connected layers of equal width whose outputs are
//! concatenated, then a final fully-connected classifier and softmax
//! produce class probabilities. With `augmented` disabled the head
//! degrades to a single fully-connected layer.

pub mod serialize;
pub mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activations::{act_backward, act_forward, ActivationKind};
use crate::error::{Error, Result};
use crate::nn::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, cross_entropy_loss,
    linear_backward, linear_forward, softmax, BatchNormCache, BatchNormState, Mode, Pad2d, BN_EPS,
};
use crate::tensor::Tensor;

/// Architecture hyperparameters. The defaults give the reference network:
/// 128x128 single-channel input, four hybrid blocks of depths 16/32/64/96,
/// a dual 128-wide fully-connected head, and 1,871,460 learnable
/// parameters for four classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_size: usize,
    pub input_channels: usize,
    pub kernel_small: usize,
    pub kernel_large: usize,
    pub block_depths: Vec<usize>,
    pub fc_width: usize,
    pub augmented: bool,
    pub activation: ActivationKind,
    pub num_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> ModelConfig {
        ModelConfig {
            input_size: 128,
            input_channels: 1,
            kernel_small: 3,
            kernel_large: 5,
            block_depths: vec![16, 32, 64, 96],
            fc_width: 128,
            augmented: true,
            activation: ActivationKind::rrelu(),
            num_classes: 4,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 {
            return Err(Error::config("input_channels", "must be >= 1"));
        }
        if self.num_classes == 0 {
            return Err(Error::config("num_classes", "must be >= 1"));
        }
        if self.fc_width == 0 {
            return Err(Error::config("fc_width", "must be >= 1"));
        }
        if self.block_depths.is_empty() {
            return Err(Error::config("block_depths", "must list at least one block"));
        }
        if !self.block_depths.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config(
                "block_depths",
                format!("must be strictly increasing, got {:?}", self.block_depths),
            ));
        }
        for (field, k) in [("kernel_small", self.kernel_small), ("kernel_large", self.kernel_large)] {
            if k == 0 || k % 2 == 0 {
                return Err(Error::config(field, format!("kernel size must be odd and >= 1, got {k}")));
            }
        }
        if self.kernel_small >= self.kernel_large {
            return Err(Error::config(
                "kernel_small",
                format!(
                    "small kernel ({}) must be smaller than large kernel ({})",
                    self.kernel_small, self.kernel_large
                ),
            ));
        }
        let halvings = 1usize << self.block_depths.len();
        if self.input_size == 0 || self.input_size % halvings != 0 {
            return Err(Error::config(
                "input_size",
                format!(
                    "{} is not divisible by 2^{} = {}; stride-2 halving must be exact",
                    self.input_size,
                    self.block_depths.len(),
                    halvings
                ),
            ));
        }
        self.activation
            .validate()
            .map_err(|e| Error::config("activation", e.to_string()))?;
        Ok(())
    }

    /// Spatial extent after all stride-2 blocks.
    pub fn final_spatial(&self) -> usize {
        self.input_size >> self.block_depths.len()
    }

    /// Flattened feature length entering the fully-connected head.
    pub fn feature_len(&self) -> usize {
        self.block_depths.last().unwrap() * self.final_spatial() * self.final_spatial()
    }

    /// Width of the concatenated head output feeding the classifier.
    pub fn head_width(&self) -> usize {
        if self.augmented {
            2 * self.fc_width
        } else {
            self.fc_width
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvParams {
    pub kernel: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct LinearParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct HybridBlock {
    pub conv_small: ConvParams,
    pub conv_large: ConvParams,
    pub gamma: Tensor,
    pub beta: Tensor,
    pub bn_state: BatchNormState,
}

#[derive(Debug, Clone)]
pub struct OrigiNet {
    pub config: ModelConfig,
    pub blocks: Vec<HybridBlock>,
    pub fc_a: LinearParams,
    pub fc_b: Option<LinearParams>,
    pub classifier: LinearParams,
}

/// Everything the backward pass needs from one hybrid block.
#[derive(Debug, Clone)]
pub struct BlockCache {
    input: Tensor,
    pre_small: Tensor,
    pre_large: Tensor,
    summed: Tensor,
    bn_cache: Option<BatchNormCache>,
    new_bn_state: BatchNormState,
}

/// Intermediates cached by `forward`; `backward` consumes a train-mode
/// cache, and the updated batch-norm running statistics are applied to the
/// model explicitly via `apply_bn_states`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    mode: Mode,
    blocks: Vec<BlockCache>,
    flat: Tensor,
    concat: Tensor,
    pub probs: Tensor,
}

impl ForwardCache {
    pub fn bn_states(&self) -> Vec<BatchNormState> {
        self.blocks.iter().map(|b| b.new_bn_state.clone()).collect()
    }
}

/// Parameter gradients in canonical parameter order (see `param_names`).
#[derive(Debug, Clone)]
pub struct Gradients(pub Vec<Tensor>);

fn he_tensor(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = normal.sample(rng);
    }
    t
}

impl OrigiNet {
    /// Deterministically initializes the network from a seed: fan-in-scaled
    /// normal weights, zero biases, unit gamma, zero beta.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<OrigiNet> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks = Vec::with_capacity(config.block_depths.len());
        let mut in_c = config.input_channels;
        let mut spatial = config.input_size;
        for &depth in &config.block_depths {
            let (ks, kl) = (config.kernel_small, config.kernel_large);
            // Both branches must agree on the output extent; the symmetric
            // (k-1)/2 padding guarantees it for odd kernels on even inputs.
            let out_s = (spatial + 2 * ((ks - 1) / 2) - ks) / 2 + 1;
            let out_l = (spatial + 2 * ((kl - 1) / 2) - kl) / 2 + 1;
            if out_s != out_l || out_s != spatial / 2 {
                return Err(Error::config(
                    "kernel_pair",
                    format!(
                        "branch output extents {out_s}/{out_l} disagree at spatial size {spatial}"
                    ),
                ));
            }
            let conv_small = ConvParams {
                kernel: he_tensor(&[depth, in_c, ks, ks], in_c * ks * ks, &mut rng),
                bias: Tensor::zeros(&[depth]),
            };
            let conv_large = ConvParams {
                kernel: he_tensor(&[depth, in_c, kl, kl], in_c * kl * kl, &mut rng),
                bias: Tensor::zeros(&[depth]),
            };
            blocks.push(HybridBlock {
                conv_small,
                conv_large,
                gamma: Tensor::filled(&[depth], 1.0),
                beta: Tensor::zeros(&[depth]),
                bn_state: BatchNormState::new(depth),
            });
            in_c = depth;
            spatial /= 2;
        }
        let feat = config.feature_len();
        let fc_a = LinearParams {
            weight: he_tensor(&[config.fc_width, feat], feat, &mut rng),
            bias: Tensor::zeros(&[config.fc_width]),
        };
        let fc_b = if config.augmented {
            Some(LinearParams {
                weight: he_tensor(&[config.fc_width, feat], feat, &mut rng),
                bias: Tensor::zeros(&[config.fc_width]),
            })
        } else {
            None
        };
        let head = config.head_width();
        let classifier = LinearParams {
            weight: he_tensor(&[config.num_classes, head], head, &mut rng),
            bias: Tensor::zeros(&[config.num_classes]),
        };
        Ok(OrigiNet { config: config.clone(), blocks, fc_a, fc_b, classifier })
    }

    /// Zero-initialized skeleton with the right shapes; used when loading
    /// weights from a file.
    pub(crate) fn zeroed(config: &ModelConfig) -> Result<OrigiNet> {
        let mut net = OrigiNet::build(config, 0)?;
        for p in net.param_refs_mut() {
            p.data_mut().fill(0.0);
        }
        Ok(net)
    }

    /// Learnable parameters in canonical order. Serialization, SGD state,
    /// gradients, and `param_names` all follow this order.
    pub fn param_refs(&self) -> Vec<&Tensor> {
        let mut refs = Vec::new();
        for b in &self.blocks {
            refs.push(&b.conv_small.kernel);
            refs.push(&b.conv_small.bias);
            refs.push(&b.conv_large.kernel);
            refs.push(&b.conv_large.bias);
            refs.push(&b.gamma);
            refs.push(&b.beta);
        }
        refs.push(&self.fc_a.weight);
        refs.push(&self.fc_a.bias);
        if let Some(fc_b) = &self.fc_b {
            refs.push(&fc_b.weight);
            refs.push(&fc_b.bias);
        }
        refs.push(&self.classifier.weight);
        refs.push(&self.classifier.bias);
        refs
    }

    pub fn param_refs_mut(&mut self) -> Vec<&mut Tensor> {
        let mut refs = Vec::new();
        for b in &mut self.blocks {
            refs.push(&mut b.conv_small.kernel);
            refs.push(&mut b.conv_small.bias);
            refs.push(&mut b.conv_large.kernel);
            refs.push(&mut b.conv_large.bias);
            refs.push(&mut b.gamma);
            refs.push(&mut b.beta);
        }
        refs.push(&mut self.fc_a.weight);
        refs.push(&mut self.fc_a.bias);
        if let Some(fc_b) = &mut self.fc_b {
            refs.push(&mut fc_b.weight);
            refs.push(&mut fc_b.bias);
        }
        refs.push(&mut self.classifier.weight);
        refs.push(&mut self.classifier.bias);
        refs
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, _) in self.blocks.iter().enumerate() {
            for suffix in [
                "conv_small.kernel",
                "conv_small.bias",
                "conv_large.kernel",
                "conv_large.bias",
                "gamma",
                "beta",
            ] {
                names.push(format!("block{i}.{suffix}"));
            }
        }
        names.push("fc_a.weight".into());
        names.push("fc_a.bias".into());
        if self.fc_b.is_some() {
            names.push("fc_b.weight".into());
            names.push("fc_b.bias".into());
        }
        names.push("classifier.weight".into());
        names.push("classifier.bias".into());
        names
    }

    /// Total learnable parameter count.
    pub fn param_count(&self) -> usize {
        self.param_refs().iter().map(|t| t.len()).sum()
    }

    /// Weight-layer count as conventionally reported: one per convolution
    /// branch, one for the (possibly dual) fully-connected stage, and one
    /// for the classifier.
    pub fn layer_count(&self) -> usize {
        self.blocks.len() * 2 + 2
    }

    /// Runs the network on an NCHW batch. Train mode uses batch statistics
    /// in every batch-norm and caches intermediates for `backward`; eval
    /// mode is a deterministic function of the stored running statistics.
    pub fn forward(&self, batch: &Tensor, mode: Mode) -> Result<(Tensor, ForwardCache)> {
        let (n, c, h, w) = batch.dims4()?;
        if c != self.config.input_channels || h != self.config.input_size || w != self.config.input_size
        {
            return Err(Error::dimension(format!(
                "batch shape {:?} does not match configured input {}x{}x{}",
                batch.shape(),
                self.config.input_channels,
                self.config.input_size,
                self.config.input_size
            )));
        }
        let act = self.config.activation;
        let mut x = batch.clone();
        let mut block_caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let pad_s = Pad2d::same_for_kernel(self.config.kernel_small);
            let pad_l = Pad2d::same_for_kernel(self.config.kernel_large);
            let pre_small =
                conv2d_forward(&x, &block.conv_small.kernel, &block.conv_small.bias, 2, pad_s)?;
            let pre_large =
                conv2d_forward(&x, &block.conv_large.kernel, &block.conv_large.bias, 2, pad_l)?;
            let act_small = act_forward(act, &pre_small)?;
            let act_large = act_forward(act, &pre_large)?;
            let summed = act_small.add(&act_large)?;
            let (bn_out, new_state, bn_cache) = batchnorm_forward(
                &summed,
                &block.gamma,
                &block.beta,
                BN_EPS,
                mode,
                &block.bn_state,
            )?;
            block_caches.push(BlockCache {
                input: x,
                pre_small,
                pre_large,
                summed,
                bn_cache,
                new_bn_state: new_state,
            });
            x = bn_out;
        }
        let flat = x.reshape(&[n, self.config.feature_len()])?;
        let out_a = linear_forward(&flat, &self.fc_a.weight, &self.fc_a.bias)?;
        let concat = match &self.fc_b {
            Some(fc_b) => {
                let out_b = linear_forward(&flat, &fc_b.weight, &fc_b.bias)?;
                let fcw = self.config.fc_width;
                let mut cat = Tensor::zeros(&[n, 2 * fcw]);
                for row in 0..n {
                    cat.data_mut()[row * 2 * fcw..row * 2 * fcw + fcw]
                        .copy_from_slice(&out_a.data()[row * fcw..(row + 1) * fcw]);
                    cat.data_mut()[row * 2 * fcw + fcw..(row + 1) * 2 * fcw]
                        .copy_from_slice(&out_b.data()[row * fcw..(row + 1) * fcw]);
                }
                cat
            }
            None => out_a,
        };
        let logits = linear_forward(&concat, &self.classifier.weight, &self.classifier.bias)?;
        let probs = softmax(&logits)?;
        let cache = ForwardCache { mode, blocks: block_caches, flat, concat, probs: probs.clone() };
        Ok((probs, cache))
    }

    /// Cross-entropy loss over the cached probabilities plus gradients for
    /// every parameter, in canonical parameter order.
    pub fn backward(&self, cache: &ForwardCache, labels: &[usize]) -> Result<(f64, Gradients)> {
        let (loss, dlogits) = cross_entropy_loss(&cache.probs, labels)?;
        let grads = self.backward_from_dlogits(cache, &dlogits)?;
        Ok((loss, grads))
    }

    /// Backward pass from an arbitrary logits gradient. Requires a
    /// train-mode cache: the batch-norm adjoint needs the batch statistics
    /// recorded during the forward pass.
    pub fn backward_from_dlogits(&self, cache: &ForwardCache, dlogits: &Tensor) -> Result<Gradients> {
        if cache.mode != Mode::Train {
            return Err(Error::State(
                "backward requires intermediates cached by a train-mode forward".into(),
            ));
        }
        if cache.blocks.len() != self.blocks.len() {
            return Err(Error::State(
                "forward cache does not match this model's block structure".into(),
            ));
        }
        let act = self.config.activation;
        let (n, _) = cache.flat.dims2()?;

        let cls_grads = linear_backward(&cache.concat, &self.classifier.weight, dlogits)?;
        let (d_fc_out_a, fc_b_grads) = match &self.fc_b {
            Some(fc_b) => {
                let fcw = self.config.fc_width;
                let mut da = Tensor::zeros(&[n, fcw]);
                let mut db = Tensor::zeros(&[n, fcw]);
                for row in 0..n {
                    da.data_mut()[row * fcw..(row + 1) * fcw].copy_from_slice(
                        &cls_grads.input.data()[row * 2 * fcw..row * 2 * fcw + fcw],
                    );
                    db.data_mut()[row * fcw..(row + 1) * fcw].copy_from_slice(
                        &cls_grads.input.data()[row * 2 * fcw + fcw..(row + 1) * 2 * fcw],
                    );
                }
                let gb = linear_backward(&cache.flat, &fc_b.weight, &db)?;
                (da, Some(gb))
            }
            None => (cls_grads.input.clone(), None),
        };
        let fc_a_grads = linear_backward(&cache.flat, &self.fc_a.weight, &d_fc_out_a)?;
        let mut d_flat = fc_a_grads.input.clone();
        if let Some(gb) = &fc_b_grads {
            d_flat = d_flat.add(&gb.input)?;
        }

        let final_spatial = self.config.final_spatial();
        let last_depth = *self.config.block_depths.last().unwrap();
        let mut d_x = d_flat.reshape(&[n, last_depth, final_spatial, final_spatial])?;

        let mut block_grads_rev = Vec::with_capacity(self.blocks.len());
        for (block, bcache) in self.blocks.iter().zip(&cache.blocks).rev() {
            let bn_cache = bcache.bn_cache.as_ref().ok_or_else(|| {
                Error::State("train-mode cache is missing batch statistics".into())
            })?;
            let bn_grads =
                batchnorm_backward(&bcache.summed, &block.gamma, BN_EPS, bn_cache, &d_x)?;
            // The elementwise branch sum routes its incoming gradient
            // unchanged into both activation branches.
            let d_pre_small = act_backward(act, &bcache.pre_small, &bn_grads.input)?;
            let d_pre_large = act_backward(act, &bcache.pre_large, &bn_grads.input)?;
            let pad_s = Pad2d::same_for_kernel(self.config.kernel_small);
            let pad_l = Pad2d::same_for_kernel(self.config.kernel_large);
            let conv_s = conv2d_backward(&bcache.input, &block.conv_small.kernel, &d_pre_small, 2, pad_s)?;
            let conv_l = conv2d_backward(&bcache.input, &block.conv_large.kernel, &d_pre_large, 2, pad_l)?;
            d_x = conv_s.input.add(&conv_l.input)?;
            block_grads_rev.push([
                conv_s.kernel,
                conv_s.bias,
                conv_l.kernel,
                conv_l.bias,
                bn_grads.gamma,
                bn_grads.beta,
            ]);
        }

        let mut flat_grads = Vec::new();
        for block in block_grads_rev.into_iter().rev() {
            flat_grads.extend(block);
        }
        flat_grads.push(fc_a_grads.weight);
        flat_grads.push(fc_a_grads.bias);
        if let Some(gb) = fc_b_grads {
            flat_grads.push(gb.weight);
            flat_grads.push(gb.bias);
        }
        flat_grads.push(cls_grads.weight);
        flat_grads.push(cls_grads.bias);
        Ok(Gradients(flat_grads))
    }

    /// Installs updated batch-norm running statistics (one per block), as
    /// returned by a train-mode forward cache.
    pub fn apply_bn_states(&mut self, states: Vec<BatchNormState>) {
        assert_eq!(states.len(), self.blocks.len());
        for (block, state) in self.blocks.iter_mut().zip(states) {
            block.bn_state = state;
        }
    }

    /// Human-readable layer summary: name, output shape, parameter count.
    pub fn layer_table(&self) -> Vec<(String, Vec<usize>, usize)> {
        let mut rows = Vec::new();
        let mut spatial = self.config.input_size;
        for (i, block) in self.blocks.iter().enumerate() {
            spatial /= 2;
            let depth = self.config.block_depths[i];
            rows.push((
                format!(
                    "block{i}.conv_{k}x{k}s2",
                    k = self.config.kernel_small
                ),
                vec![depth, spatial, spatial],
                block.conv_small.kernel.len() + block.conv_small.bias.len(),
            ));
            rows.push((
                format!(
                    "block{i}.conv_{k}x{k}s2",
                    k = self.config.kernel_large
                ),
                vec![depth, spatial, spatial],
                block.conv_large.kernel.len() + block.conv_large.bias.len(),
            ));
            rows.push((
                format!("block{i}.batchnorm"),
                vec![depth, spatial, spatial],
                block.gamma.len() + block.beta.len(),
            ));
        }
        rows.push((
            "fc_a".into(),
            vec![self.config.fc_width],
            self.fc_a.weight.len() + self.fc_a.bias.len(),
        ));
        if let Some(fc_b) = &self.fc_b {
            rows.push((
                "fc_b".into(),
                vec![self.config.fc_width],
                fc_b.weight.len() + fc_b.bias.len(),
            ));
        }
        rows.push((
            "classifier".into(),
            vec![self.config.num_classes],
            self.classifier.weight.len() + self.classifier.bias.len(),
        ));
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::argmax_rows;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            input_size: 16,
            input_channels: 1,
            block_depths: vec![4, 8],
            fc_width: 8,
            num_classes: 3,
            ..Default::default()
        }
    }

    #[test]
    fn default_param_count_is_reference_value() {
        let net = OrigiNet::build(&ModelConfig::default(), 0).unwrap();
        assert_eq!(net.param_count(), 1_871_460);
        assert_eq!(net.layer_count(), 10);
    }

    #[test]
    fn param_count_by_independent_arithmetic() {
        // Per-layer sums, written out rather than derived from the builder.
        let conv = |d: usize, c: usize, k: usize| d * c * k * k;
        let conv_weights = conv(16, 1, 3)
            + conv(16, 1, 5)
            + conv(32, 16, 3)
            + conv(32, 16, 5)
            + conv(64, 32, 3)
            + conv(64, 32, 5)
            + conv(96, 64, 3)
            + conv(96, 64, 5);
        assert_eq!(conv_weights, 296_480);
        let conv_biases = 2 * (16 + 32 + 64 + 96);
        assert_eq!(conv_biases, 416);
        let bn = 2 * (16 + 32 + 64 + 96);
        let fc = 2 * (6144 * 128 + 128);
        let classifier = 256 * 4 + 4;
        assert_eq!(conv_weights + conv_biases + bn + fc + classifier, 1_871_460);
    }

    #[test]
    fn single_fc_variant_param_delta() {
        let mut cfg = ModelConfig::default();
        cfg.augmented = false;
        let net = OrigiNet::build(&cfg, 0).unwrap();
        // Dropping one 6144->128 layer removes 786,560 parameters, and the
        // classifier input narrows from 256 to 128, removing 128 * Z more.
        let expected = 1_871_460 - (6144 * 128 + 128) - 128 * 4;
        assert_eq!(net.param_count(), expected);
        assert_eq!(net.param_count(), 1_084_388);
        assert_eq!(net.classifier.weight.shape(), &[4, 128]);
    }

    #[test]
    fn toy_param_count_by_hand() {
        let cfg = ModelConfig {
            input_size: 8,
            block_depths: vec![4],
            fc_width: 4,
            num_classes: 2,
            ..Default::default()
        };
        let net = OrigiNet::build(&cfg, 1).unwrap();
        // conv3x3: 4*1*9+4 = 40; conv5x5: 4*1*25+4 = 104; bn: 8;
        // flat = 4*4*4 = 64; two fc: 2*(64*4+4) = 520; classifier: 8*2+2 = 18.
        assert_eq!(net.param_count(), 40 + 104 + 8 + 520 + 18);
    }

    #[test]
    fn builds_are_seed_deterministic() {
        let a = OrigiNet::build(&tiny_config(), 42).unwrap();
        let b = OrigiNet::build(&tiny_config(), 42).unwrap();
        for (x, y) in a.param_refs().iter().zip(b.param_refs()) {
            assert_eq!(x.data(), y.data());
        }
        let c = OrigiNet::build(&tiny_config(), 43).unwrap();
        assert!(a.param_refs()[0].data() != c.param_refs()[0].data());
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = ModelConfig::default();
        cfg.input_size = 100; // not divisible by 16
        match cfg.validate().unwrap_err() {
            Error::Config { field, .. } => assert_eq!(field, "input_size"),
            other => panic!("unexpected error {other:?}"),
        }
        let mut cfg = ModelConfig::default();
        cfg.block_depths = vec![16, 16];
        assert!(matches!(cfg.validate().unwrap_err(), Error::Config { field, .. } if field == "block_depths"));
        let mut cfg = ModelConfig::default();
        cfg.kernel_small = 4;
        assert!(matches!(cfg.validate().unwrap_err(), Error::Config { field, .. } if field == "kernel_small"));
        let mut cfg = ModelConfig::default();
        cfg.kernel_small = 5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn forward_shape_chain_and_uniform_probs_on_zero_input() {
        let cfg = tiny_config();
        let net = OrigiNet::build(&cfg, 7).unwrap();
        let batch = Tensor::zeros(&[2, 1, 16, 16]);
        let (probs, cache) = net.forward(&batch, Mode::Train).unwrap();
        assert_eq!(probs.shape(), &[2, 3]);
        // Zero input, zero biases: every logit is zero, so probabilities
        // are uniform.
        for &p in probs.data() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        // Spatial chain 16 -> 8 -> 4; flattened 8 * 4 * 4 = 128.
        assert_eq!(cache.flat.shape(), &[2, 128]);
        assert_eq!(cache.concat.shape(), &[2, 16]);
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let cfg = tiny_config();
        let mut net = OrigiNet::build(&cfg, 3).unwrap();
        let batch = Tensor::filled(&[2, 1, 16, 16], 0.3);
        let (_, cache) = net.forward(&batch, Mode::Train).unwrap();
        net.apply_bn_states(cache.bn_states());
        let (a, _) = net.forward(&batch, Mode::Eval).unwrap();
        let (b, _) = net.forward(&batch, Mode::Eval).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn probability_rows_sum_to_one() {
        let cfg = tiny_config();
        let net = OrigiNet::build(&cfg, 9).unwrap();
        let mut batch = Tensor::zeros(&[3, 1, 16, 16]);
        for (i, v) in batch.data_mut().iter_mut().enumerate() {
            *v = ((i * 37) % 101) as f64 / 101.0;
        }
        let (probs, _) = net.forward(&batch, Mode::Train).unwrap();
        for row in 0..3 {
            let sum: f64 = probs.data()[row * 3..(row + 1) * 3].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(probs.data()[row * 3..(row + 1) * 3].iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn zero_dlogits_gives_zero_gradients() {
        let cfg = tiny_config();
        let net = OrigiNet::build(&cfg, 5).unwrap();
        let batch = Tensor::filled(&[2, 1, 16, 16], 0.4);
        let (_, cache) = net.forward(&batch, Mode::Train).unwrap();
        let dlogits = Tensor::zeros(&[2, 3]);
        let grads = net.backward_from_dlogits(&cache, &dlogits).unwrap();
        for g in &grads.0 {
            assert!(g.data().iter().all(|&v| v == 0.0));
        }
        // Gradient tensor shapes mirror parameter shapes, in order.
        for (g, p) in grads.0.iter().zip(net.param_refs()) {
            assert_eq!(g.shape(), p.shape());
        }
    }

    #[test]
    fn backward_rejects_eval_cache() {
        let cfg = tiny_config();
        let mut net = OrigiNet::build(&cfg, 5).unwrap();
        let batch = Tensor::filled(&[2, 1, 16, 16], 0.4);
        let (_, cache) = net.forward(&batch, Mode::Train).unwrap();
        net.apply_bn_states(cache.bn_states());
        let (_, eval_cache) = net.forward(&batch, Mode::Eval).unwrap();
        assert!(matches!(
            net.backward(&eval_cache, &[0, 1]).unwrap_err(),
            Error::State(_)
        ));
    }

    #[test]
    fn identical_fc_initialization_gives_identical_fc_gradients() {
        let cfg = tiny_config();
        let mut net = OrigiNet::build(&cfg, 11).unwrap();
        // Make both head branches and both halves of the classifier weight
        // identical so the two computational paths coincide.
        net.fc_b = Some(net.fc_a.clone());
        let fcw = cfg.fc_width;
        let (_, head) = net.classifier.weight.dims2().unwrap();
        assert_eq!(head, 2 * fcw);
        let mut w = net.classifier.weight.clone();
        for row in 0..cfg.num_classes {
            let src: Vec<f64> = w.data()[row * head..row * head + fcw].to_vec();
            w.data_mut()[row * head + fcw..(row + 1) * head].copy_from_slice(&src);
        }
        net.classifier.weight = w;

        let mut batch = Tensor::zeros(&[2, 1, 16, 16]);
        for (i, v) in batch.data_mut().iter_mut().enumerate() {
            *v = ((i * 13) % 29) as f64 / 29.0;
        }
        let (_, cache) = net.forward(&batch, Mode::Train).unwrap();
        let (_, grads) = net.backward(&cache, &[0, 2]).unwrap();
        let names = net.param_names();
        let idx = |n: &str| names.iter().position(|x| x == n).unwrap();
        assert_eq!(
            grads.0[idx("fc_a.weight")].data(),
            grads.0[idx("fc_b.weight")].data()
        );
        assert_eq!(grads.0[idx("fc_a.bias")].data(), grads.0[idx("fc_b.bias")].data());
    }

    #[test]
    fn argmax_changes_with_input() {
        let cfg = tiny_config();
        let net = OrigiNet::build(&cfg, 2).unwrap();
        let mut batch = Tensor::zeros(&[2, 1, 16, 16]);
        for (i, v) in batch.data_mut().iter_mut().enumerate() {
            *v = (i % 7) as f64 / 7.0;
        }
        let (probs, _) = net.forward(&batch, Mode::Train).unwrap();
        let preds = argmax_rows(&probs).unwrap();
        assert_eq!(preds.len(), 2);
    }
}
