//! Flat `key = value` run configuration.
//!
//! One assignment per line; blank lines and `#` comments are ignored.
//! Unknown and duplicated keys are errors. Every key has a default, so a
//! config file only needs the values it overrides. The format is
//! deliberately flat so configs diff cleanly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activations::ActivationKind;
use crate::active_imaging::Ft1Mode;
use crate::data::PipelineConfig;
use crate::error::{Error, Result};
use crate::model::train::TrainHyper;
use crate::model::ModelConfig;

/// Model, optimizer, and pipeline settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub hyper: TrainHyper,
    pub pipeline: PipelineConfig,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse value `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::config(key, format!("expected true/false, got `{other}`"))),
    }
}

fn parse_optional_f64(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        parse_value::<f64>(key, value).map(Some)
    }
}

/// Parses configuration text. Activation selection is split across two
/// keys: `activation` names the kind and `activation_alpha` overrides its
/// slope parameter where one exists.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut activation_name: Option<String> = None;
    let mut activation_alpha: Option<f64> = None;
    let mut seen = std::collections::BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", idx + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(Error::config(key, "duplicate key"));
        }
        match key {
            "input_size" => cfg.model.input_size = parse_value(key, value)?,
            "input_channels" => cfg.model.input_channels = parse_value(key, value)?,
            "kernel_small" => cfg.model.kernel_small = parse_value(key, value)?,
            "kernel_large" => cfg.model.kernel_large = parse_value(key, value)?,
            "block_depths" => {
                cfg.model.block_depths = value
                    .split(',')
                    .map(|v| parse_value(key, v.trim()))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "fc_width" => cfg.model.fc_width = parse_value(key, value)?,
            "augmented" => cfg.model.augmented = parse_bool(key, value)?,
            "activation" => activation_name = Some(value.to_string()),
            "activation_alpha" => activation_alpha = Some(parse_value(key, value)?),
            "num_classes" => cfg.model.num_classes = parse_value(key, value)?,

            "lr" => cfg.hyper.lr = parse_value(key, value)?,
            "momentum" => cfg.hyper.momentum = parse_value(key, value)?,
            "epochs" => cfg.hyper.epochs = parse_value(key, value)?,
            "batch_size" => cfg.hyper.batch_size = parse_value(key, value)?,
            "seed" => cfg.hyper.seed = parse_value(key, value)?,
            "target_train_acc" => cfg.hyper.target_train_acc = parse_optional_f64(key, value)?,
            "target_val_acc" => cfg.hyper.target_val_acc = parse_optional_f64(key, value)?,

            "augment_product" => cfg.pipeline.augment_product = parse_bool(key, value)?,
            "ft1_mode" => {
                cfg.pipeline.ft1_mode = match value {
                    "zero" => Ft1Mode::Zero,
                    "first_frame" => Ft1Mode::FirstFrame,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("expected zero|first_frame, got `{other}`"),
                        ))
                    }
                }
            }
            "abs_diff" => cfg.pipeline.abs_diff = parse_bool(key, value)?,
            "grayscale" => cfg.pipeline.grayscale = parse_bool(key, value)?,
            "train_ratio" => cfg.pipeline.train_ratio = parse_value(key, value)?,

            other => return Err(Error::config(other, "unknown configuration key")),
        }
    }

    if let Some(name) = activation_name {
        cfg.model.activation = match name.as_str() {
            "sigmoid" => ActivationKind::Sigmoid,
            "tanh" => ActivationKind::Tanh,
            "relu" => ActivationKind::Relu,
            "elu" => ActivationKind::elu(),
            "leaky_relu" => ActivationKind::leaky_relu(),
            "rrelu" => ActivationKind::rrelu(),
            other => {
                return Err(Error::config(
                    "activation",
                    format!(
                        "unknown activation `{other}` (expected sigmoid|tanh|relu|elu|leaky_relu|rrelu)"
                    ),
                ))
            }
        };
    }
    if let Some(alpha) = activation_alpha {
        cfg.model.activation = match cfg.model.activation {
            ActivationKind::Elu { .. } => ActivationKind::Elu { alpha },
            ActivationKind::LeakyRelu { .. } => ActivationKind::LeakyRelu { alpha },
            ActivationKind::Rrelu { .. } => ActivationKind::Rrelu { alpha },
            other => {
                return Err(Error::config(
                    "activation_alpha",
                    format!("activation `{}` has no alpha parameter", other.name()),
                ))
            }
        };
    }

    cfg.model.validate()?;
    cfg.hyper.validate()?;
    if !(cfg.pipeline.train_ratio > 0.0 && cfg.pipeline.train_ratio < 1.0) {
        return Err(Error::config(
            "train_ratio",
            format!("must lie strictly between 0 and 1, got {}", cfg.pipeline.train_ratio),
        ));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot read config {}: {e}", path.display()),
        ))
    })?;
    parse_config_str(&text)
}

/// Canonical textual form; parsing it reproduces the config.
pub fn config_to_text(cfg: &RunConfig) -> String {
    let (activation, alpha) = match cfg.model.activation {
        ActivationKind::Sigmoid => ("sigmoid", None),
        ActivationKind::Tanh => ("tanh", None),
        ActivationKind::Relu => ("relu", None),
        ActivationKind::Elu { alpha } => ("elu", Some(alpha)),
        ActivationKind::LeakyRelu { alpha } => ("leaky_relu", Some(alpha)),
        ActivationKind::Rrelu { alpha } => ("rrelu", Some(alpha)),
    };
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
    let mut out = String::new();
    out.push_str("# model\n");
    out.push_str(&format!("input_size = {}\n", cfg.model.input_size));
    out.push_str(&format!("input_channels = {}\n", cfg.model.input_channels));
    out.push_str(&format!("kernel_small = {}\n", cfg.model.kernel_small));
    out.push_str(&format!("kernel_large = {}\n", cfg.model.kernel_large));
    let depths: Vec<String> = cfg.model.block_depths.iter().map(|d| d.to_string()).collect();
    out.push_str(&format!("block_depths = {}\n", depths.join(",")));
    out.push_str(&format!("fc_width = {}\n", cfg.model.fc_width));
    out.push_str(&format!("augmented = {}\n", cfg.model.augmented));
    out.push_str(&format!("activation = {activation}\n"));
    if let Some(a) = alpha {
        out.push_str(&format!("activation_alpha = {a}\n"));
    }
    out.push_str(&format!("num_classes = {}\n", cfg.model.num_classes));
    out.push_str("\n# training\n");
    out.push_str(&format!("lr = {}\n", cfg.hyper.lr));
    out.push_str(&format!("momentum = {}\n", cfg.hyper.momentum));
    out.push_str(&format!("epochs = {}\n", cfg.hyper.epochs));
    out.push_str(&format!("batch_size = {}\n", cfg.hyper.batch_size));
    out.push_str(&format!("seed = {}\n", cfg.hyper.seed));
    out.push_str(&format!("target_train_acc = {}\n", opt(cfg.hyper.target_train_acc)));
    out.push_str(&format!("target_val_acc = {}\n", opt(cfg.hyper.target_val_acc)));
    out.push_str("\n# pipeline\n");
    out.push_str(&format!("augment_product = {}\n", cfg.pipeline.augment_product));
    let ft1 = match cfg.pipeline.ft1_mode {
        Ft1Mode::Zero => "zero",
        Ft1Mode::FirstFrame => "first_frame",
    };
    out.push_str(&format!("ft1_mode = {ft1}\n"));
    out.push_str(&format!("abs_diff = {}\n", cfg.pipeline.abs_diff));
    out.push_str(&format!("grayscale = {}\n", cfg.pipeline.grayscale));
    out.push_str(&format!("train_ratio = {}\n", cfg.pipeline.train_ratio));
    out
}
