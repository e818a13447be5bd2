//! Dataset ingestion and sample materialization.
//!
//! The pipeline turns manifest entries into network-ready samples:
//! frames -> (optional grayscale) -> active image -> min-max normalization
//! to [0, 255] -> (training only) rotation/equalization augmentation ->
//! scale to [0, 1] -> CHW tensor. Validation and test entries skip the
//! augmentation stage. The 80:20 train/validation split happens at the
//! video level before augmentation, so no augmented copy of a validation
//! video can leak into training.

pub mod augment;
pub mod io;
pub mod loso;
pub mod manifest;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::active_imaging::{active_image, normalize_active, ActiveImagingOptions, FrameSequence, Ft1Mode};
use crate::data::augment::{augment_image, AugmentTag};
use crate::data::manifest::ManifestEntry;
use crate::error::{Error, Result};
use crate::imagebuf::Image;
use crate::model::train::Example;
use crate::tensor::Tensor;

/// Pipeline-level options, all independent of the model architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Emit raw and equalized copies of every rotation (14 samples per
    /// image) instead of equalizing all rotations (7 samples).
    pub augment_product: bool,
    pub ft1_mode: Ft1Mode,
    pub abs_diff: bool,
    /// Convert color frames to grayscale before active imaging.
    pub grayscale: bool,
    /// Video-level train share of the train/validation split.
    pub train_ratio: f64,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            augment_product: true,
            ft1_mode: Ft1Mode::Zero,
            abs_diff: false,
            grayscale: true,
            train_ratio: 0.8,
        }
    }
}

impl PipelineConfig {
    pub fn imaging_options(&self) -> ActiveImagingOptions {
        ActiveImagingOptions { ft1_mode: self.ft1_mode, abs_diff: self.abs_diff }
    }
}

/// One network-ready sample with its provenance.
#[derive(Debug, Clone)]
pub struct Sample {
    /// CHW pixels scaled to [0, 1].
    pub image: Tensor,
    pub label: usize,
    pub subject_id: String,
    pub tag: AugmentTag,
}

impl Sample {
    pub fn to_example(&self) -> Example {
        Example { image: self.image.clone(), label: self.label }
    }
}

fn image_to_unit_tensor(img: &Image) -> Tensor {
    img.map(|v| v / 255.0).to_tensor()
}

/// Loads one entry's frames and produces its normalized active image
/// (pixels in [0, 255]).
pub fn entry_active_image(entry: &ManifestEntry, cfg: &PipelineConfig) -> Result<Image> {
    let mut frames = io::load_frames(&entry.path)?;
    if cfg.grayscale {
        frames = frames
            .iter()
            .map(|f| f.to_grayscale())
            .collect::<Result<Vec<_>>>()?;
    }
    let seq = FrameSequence::new(frames, entry.subject_id.clone(), entry.label)?;
    let active = active_image(&seq, &cfg.imaging_options())?;
    Ok(normalize_active(&active)?.pixels)
}

/// Un-augmented sample for one entry (identity rotation, no equalization).
pub fn raw_sample(entry: &ManifestEntry, cfg: &PipelineConfig) -> Result<Sample> {
    let active = entry_active_image(entry, cfg)?;
    Ok(Sample {
        image: image_to_unit_tensor(&active),
        label: entry.label,
        subject_id: entry.subject_id.clone(),
        tag: AugmentTag { angle_deg: 0.0, hist_eq: false },
    })
}

/// All augmented samples for one entry. Labels and subject ids are carried
/// through unchanged; the angle-0 raw variant is bit-identical to
/// `raw_sample` for the same entry.
pub fn augmented_samples(entry: &ManifestEntry, cfg: &PipelineConfig) -> Result<Vec<Sample>> {
    let active = entry_active_image(entry, cfg)?;
    Ok(augment_image(&active, cfg.augment_product)?
        .into_iter()
        .map(|(tag, img)| Sample {
            image: image_to_unit_tensor(&img),
            label: entry.label,
            subject_id: entry.subject_id.clone(),
            tag,
        })
        .collect())
}

/// Materializes a list of entries with augmentation (training sets).
pub fn materialize_augmented(entries: &[ManifestEntry], cfg: &PipelineConfig) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(entries.len() * 14);
    for e in entries {
        out.extend(augmented_samples(e, cfg)?);
    }
    Ok(out)
}

/// Materializes a list of entries without augmentation (validation/test).
pub fn materialize_raw(entries: &[ManifestEntry], cfg: &PipelineConfig) -> Result<Vec<Sample>> {
    entries.iter().map(|e| raw_sample(e, cfg)).collect()
}

/// Asserts the leave-one-subject-out soundness property on materialized
/// samples: no training sample may carry the held-out subject's id.
pub fn assert_no_subject_leak(train: &[Sample], test_subject: &str) -> Result<()> {
    if let Some(bad) = train.iter().find(|s| s.subject_id == test_subject) {
        return Err(Error::Protocol(format!(
            "training sample for subject {} leaked into fold testing subject {}",
            bad.subject_id, test_subject
        )));
    }
    Ok(())
}

pub use manifest::load_manifest;
