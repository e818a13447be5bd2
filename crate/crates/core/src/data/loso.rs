//! Leave-one-subject-out fold generation and the train/validation split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::manifest::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LosoFold {
    pub test_subject: String,
    pub train: Vec<ManifestEntry>,
    pub test: Vec<ManifestEntry>,
}

/// One fold per distinct subject, ordered by subject id. Within a fold the
/// test set is exactly that subject's videos and the train set is
/// everything else.
pub fn loso_splits(manifest: &DatasetManifest) -> Result<Vec<LosoFold>> {
    let subjects = manifest.distinct_subjects();
    if subjects.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-subject-out requires at least 2 distinct subjects, found {}",
            subjects.len()
        )));
    }
    Ok(subjects
        .into_iter()
        .map(|subject| {
            let (test, train): (Vec<_>, Vec<_>) = manifest
                .entries
                .iter()
                .cloned()
                .partition(|e| e.subject_id == subject);
            LosoFold { test_subject: subject, train, test }
        })
        .collect())
}

/// Seeded shuffle followed by a ratio split at the video level; the train
/// side receives round(ratio * n) entries.
pub fn train_val_split(
    entries: &[ManifestEntry],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!(
            "train ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    let mut shuffled: Vec<ManifestEntry> = entries.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n_train = (ratio * entries.len() as f64).round() as usize;
    let val = shuffled.split_off(n_train.min(entries.len()));
    Ok((shuffled, val))
}
